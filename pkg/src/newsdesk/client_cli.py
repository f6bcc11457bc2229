"""Reporter command line: the thin verb layer over the client library.

Exit codes: 0 ok, 2 validation problem, 3 network or auth failure,
4 protocol error.
"""

from __future__ import annotations

import argparse
import sys

from .client import (
    ClientError,
    Pager,
    ReporterClient,
    ServerRejected,
    ValidationFailure,
)
from .model import ResultPage


def _print_page(page: ResultPage) -> None:
    if not page.items:
        print("no results")
        return
    first = (page.page - 1) * 5 + 1
    print(f"page {page.page}: results {first}-{first + len(page.items) - 1} "
          f"of {page.total_matches}")
    for item in page.items:
        print(f"#{item.message_id} [{item.category}] {item.title} by "
              f"{item.author} ({item.place})")
        body = item.body.replace("\n", " ")
        print(f"    {body[:120]}")


def cmd_configure(client: ReporterClient, args) -> int:
    client.configure(args.username, args.password, args.server_url)
    print(f"configuration saved to {client.config_path}")
    return 0


def cmd_config(client: ReporterClient, args) -> int:
    if args.action == "edit":
        if args.username is None and args.password is None and args.server_url is None:
            raise ValidationFailure("nothing to change")
        client.edit_config(args.username, args.password, args.server_url)
        print("configuration updated")
        return 0
    config = client.load_config()
    print(f"username:   {config.username}")
    print(f"password:   {'*' * 8}")
    print(f"server_url: {config.server_url}")
    return 0


def cmd_register(client: ReporterClient, args) -> int:
    payload = client.register(args.first, args.last)
    print(payload.message)
    return 0


def cmd_login(client: ReporterClient, args) -> int:
    client.login()
    print("logged in")
    return 0


def cmd_compose(client: ReporterClient, args) -> int:
    draft = client.compose(args.title, args.body, args.place, args.category)
    print(f"saved draft {draft.draft_id}")
    return 0


def cmd_attach(client: ReporterClient, args) -> int:
    draft = client.attach(args.draft_id, args.file, args.kind)
    print(f"draft {draft.draft_id} now has {len(draft.attachments)} attachment(s)")
    return 0


def cmd_upload(client: ReporterClient, args) -> int:
    bar_mode = sys.stdout.isatty()

    def show(pct: int) -> None:
        if bar_mode:
            filled = pct * 30 // 100
            sys.stdout.write(f"\r[{'#' * filled}{' ' * (30 - filled)}] {pct:3d}%")
            if pct == 100:
                sys.stdout.write("\n")
            sys.stdout.flush()
        else:
            print(f"progress {pct}%", flush=True)

    message_id = client.upload(args.draft_id, progress=show)
    print(f"uploaded as message {message_id}")
    return 0


def _interactive_pager(pager: Pager) -> None:
    _print_page(pager.current)
    while pager.has_more:
        try:
            answer = input("NEXT? [n=next, q=quit] ").strip().lower()
        except EOFError:
            return
        if answer in ("n", "next", ""):
            _print_page(pager.next())
        elif answer in ("q", "quit"):
            return
        else:
            print("type n for the next page or q to quit")


def cmd_search(client: ReporterClient, args) -> int:
    pager = client.search(args.keyword, args.field)
    _interactive_pager(pager)
    return 0


def cmd_edit(client: ReporterClient, args) -> int:
    payload = client.edit(
        args.message_id,
        title=args.title,
        body=args.body,
        place=args.place,
        category=args.category,
    )
    print(payload.message)
    return 0


def cmd_feed(client: ReporterClient, args) -> int:
    if args.message is not None:
        summary, media = client.read_message(args.message)
        print(f"#{summary.message_id} {summary.title}")
        print(f"by {summary.author}, {summary.place} [{summary.category}] "
              f"{summary.created_at:%Y-%m-%d %H:%M}")
        print()
        print(summary.body)
        print()
        print(f"{summary.media_count} attachment(s)")
        return 0
    if args.category:
        for message_id, title in client.read_category(args.category):
            print(f"#{message_id}\t{title}")
        return 0
    names = client.read_feed()
    if not names:
        print("no categories yet")
    for name in names:
        print(name)
    return 0


def cmd_saved(client: ReporterClient, args) -> int:
    if args.action == "rm":
        if args.draft_id is None:
            raise ValidationFailure("saved rm needs a draft id")
        client.delete_saved(args.draft_id)
        print(f"removed draft {args.draft_id}")
        return 0
    items = client.saved_items()
    if not items:
        print("no saved items")
    for draft in items:
        state = draft.upload_state
        if draft.message_id is not None:
            state += f" (message {draft.message_id})"
        print(f"draft {draft.draft_id} [{state}] \"{draft.title}\" "
              f"{len(draft.attachments)} attachment(s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newsdesk-reporter", description="Headless field-reporter client"
    )
    parser.add_argument(
        "--data-dir", help="override the client data directory (config, drafts)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("configure", help="store account and server settings")
    p.add_argument("--username", required=True)
    p.add_argument("--password", required=True)
    p.add_argument("--server-url", required=True)
    p.set_defaults(func=cmd_configure)

    p = sub.add_parser("config", help="show or edit the stored settings")
    p.add_argument("action", choices=["show", "edit"], nargs="?", default="show")
    p.add_argument("--username")
    p.add_argument("--password")
    p.add_argument("--server-url")
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("register", help="create the configured account on the server")
    p.add_argument("--first", required=True)
    p.add_argument("--last", required=True)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("login", help="verify credentials and cache a session token")
    p.set_defaults(func=cmd_login)

    p = sub.add_parser("compose", help="create a local draft")
    p.add_argument("--title", required=True)
    p.add_argument("--body", required=True)
    p.add_argument("--place", default="")
    p.add_argument("--category", required=True)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("attach", help="add a media file to a draft")
    p.add_argument("draft_id", type=int)
    p.add_argument("file")
    p.add_argument("--kind", required=True, choices=["image", "audio", "video"])
    p.set_defaults(func=cmd_attach)

    p = sub.add_parser("upload", help="send a draft: text first, then media")
    p.add_argument("draft_id", type=int)
    p.set_defaults(func=cmd_upload)

    p = sub.add_parser("search", help="search the server, five results a page")
    p.add_argument("keyword")
    p.add_argument("--field", default="title", choices=["title", "body", "author"])
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("edit", help="change fields of an uploaded story")
    p.add_argument("message_id", type=int)
    p.add_argument("--title")
    p.add_argument("--body")
    p.add_argument("--place")
    p.add_argument("--category")
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("feed", help="browse categories, titles and stories")
    p.add_argument("category", nargs="?")
    p.add_argument("--message", "-m", type=int, help="read one story in full")
    p.set_defaults(func=cmd_feed)

    p = sub.add_parser("saved", help="list saved items, or remove one")
    p.add_argument("action", choices=["rm"], nargs="?")
    p.add_argument("draft_id", type=int, nargs="?")
    p.set_defaults(func=cmd_saved)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    client = ReporterClient(args.data_dir)
    try:
        return args.func(client, args)
    except ServerRejected as exc:
        print(f"error: {exc}", file=sys.stderr)
        for name, reason in exc.payload.detail:
            print(f"  {name}: {reason}", file=sys.stderr)
        return exc.exit_code
    except ClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
