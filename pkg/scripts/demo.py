#!/usr/bin/env python3
"""Loopback walkthrough: start a throwaway server, then drive the full
reporter workflow against it and print what happens at each step.

    python scripts/demo.py
"""

import sys
import tempfile
import threading
import urllib.parse
import urllib.request
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from newsdesk import client_cli, wire  # noqa: E402
from newsdesk.server import NewsServer, ServerConfig  # noqa: E402
from newsdesk.store import Store  # noqa: E402


def post(base, path, fields, token=None):
    data = urllib.parse.urlencode(fields).encode()
    request = urllib.request.Request(base + path, data=data, method="POST")
    request.add_header("Content-Type", "application/x-www-form-urlencoded")
    if token:
        request.add_header("X-Auth-Token", token)
    with urllib.request.urlopen(request) as response:
        return response.read()


def main() -> int:
    workdir = Path(tempfile.mkdtemp(prefix="newsdesk-demo-"))
    config = ServerConfig(
        bind_port=0, data_dir=workdir / "site", admin_usernames=("chief",)
    )
    server = NewsServer(config, Store(config.data_dir))
    threading.Thread(target=server.serve_forever, daemon=True).start()
    base = server.base_url
    print(f"server listening at {base} (data in {workdir})\n")

    home = str(workdir / "reporter")

    def reporter(*argv):
        print(f"$ newsdesk-reporter {' '.join(argv)}")
        code = client_cli.main(["--data-dir", home, *argv])
        print()
        assert code == 0, f"exit code {code}"

    reporter("configure", "--username", "ada_l", "--password", "s3cret99",
             "--server-url", base)
    reporter("register", "--first", "Ada", "--last", "L")

    jpeg = workdir / "shot.jpeg"
    jpeg.write_bytes(b"\xff\xd8\xff\xe0" + b"J" * 40_000)
    mp3 = workdir / "clip.mp3"
    mp3.write_bytes(b"ID3\x04" + b"M" * 60_000)

    reporter("compose", "--title", "Flood in Delta", "--body",
             "Waters rising fast; bridge closed.", "--place", "Delta",
             "--category", "Weather")
    reporter("attach", "1", str(jpeg), "--kind", "image")
    reporter("attach", "1", str(mp3), "--kind", "audio")
    reporter("upload", "1")
    reporter("search", "flood")
    reporter("edit", "1", "--title", "Flood in Delta Worsens")
    reporter("feed")
    reporter("feed", "Weather")
    reporter("feed", "-m", "1")
    reporter("saved")

    print("moderation: registering an admin and deactivating story 1")
    post(base, "/api/register", {
        "first_name": "Boss", "last_name": "Chief",
        "username": "chief", "password": "chief99",
    })
    token = wire.decode_session(
        post(base, "/api/login", {"username": "chief", "password": "chief99"})
    )
    post(base, "/api/admin/message/1/status", {"status": "inactive"}, token)
    feed = urllib.request.urlopen(base + "/feed.xml").read()
    print(f"feed now carries {feed.count(b'<item>')} item(s)\n")

    server.shutdown()
    server.server_close()
    print("demo complete")
    return 0


if __name__ == "__main__":
    sys.exit(main())
