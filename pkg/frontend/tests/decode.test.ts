import { describe, expect, it } from "vitest";

import {
  decodeNewsDetail,
  decodeNewsList,
  decodeSession,
  decodeStatus,
} from "../src/decode.js";
import { DecodeError, parseXml } from "../src/xml.js";

const NEWS = (body: string, status = "active") =>
  `<news id="7"><title>Flood in Delta</title><author>ada_l</author>` +
  `<place>Delta</place><category>Weather</category><body>${body}</body>` +
  `<created>2026-08-10T12:34:56Z</created><status>${status}</status>` +
  `<media count="2" thumb="1"></media></news>`;

describe("parseXml", () => {
  it("reads elements, attributes and entities", () => {
    const root = parseXml(`<a one="1 &amp; 2">x &lt;y&gt; &#65;</a>`);
    expect(root.name).toBe("a");
    expect(root.attrs.one).toBe("1 & 2");
    expect(root.text).toBe("x <y> A");
  });

  it("skips comments and tolerates a declaration", () => {
    const root = parseXml(`<?xml version="1.0"?><!-- hi --><a><b></b></a>`);
    expect(root.children.map((c) => c.name)).toEqual(["b"]);
  });

  it("rejects mismatched close tags", () => {
    expect(() => parseXml("<a><b></a>")).toThrow(DecodeError);
  });

  it("rejects trailing content", () => {
    expect(() => parseXml("<a></a>junk")).toThrow(DecodeError);
  });
});

describe("decodeNewsList", () => {
  it("keeps response order", () => {
    const xml =
      `<newslist page="1" total="2" more="false">` +
      NEWS("one").replace('id="7"', 'id="9"') +
      NEWS("two") +
      `</newslist>`;
    const stories = decodeNewsList(xml);
    expect(stories.map((s) => s.id)).toEqual([9, 7]);
    expect(stories[0].thumb).toBe(1);
    expect(stories[0].created.toISOString()).toBe("2026-08-10T12:34:56.000Z");
  });

  it("keeps markup in body text as plain text", () => {
    const xml =
      `<newslist page="1" total="1" more="false">` +
      NEWS("&lt;b&gt;bold&lt;/b&gt; &lt;script&gt;evil()&lt;/script&gt;") +
      `</newslist>`;
    expect(decodeNewsList(xml)[0].body).toBe(
      "<b>bold</b> <script>evil()</script>",
    );
  });

  it("fails loudly on missing fields", () => {
    const xml = `<newslist page="1" total="1" more="false"><news id="1"><title>t</title></news></newslist>`;
    expect(() => decodeNewsList(xml)).toThrow(DecodeError);
  });

  it("fails loudly on something that is not a newslist", () => {
    expect(() => decodeNewsList("<html></html>")).toThrow(DecodeError);
    expect(() => decodeNewsList("plain text")).toThrow(DecodeError);
  });
});

describe("decodeNewsDetail", () => {
  it("lists attachments in order", () => {
    const xml = NEWS("body").replace(
      '<media count="2" thumb="1"></media>',
      '<media count="2" thumb="1">' +
        '<item id="1" kind="image" format="jpeg" length="10"></item>' +
        '<item id="2" kind="audio" format="mp3" length="20"></item>' +
        "</media>",
    );
    const { story, media } = decodeNewsDetail(xml);
    expect(story.mediaCount).toBe(2);
    expect(media.map((m) => [m.id, m.kind])).toEqual([
      [1, "image"],
      [2, "audio"],
    ]);
  });
});

describe("decodeStatus", () => {
  it("carries per-field detail", () => {
    const xml =
      `<status code="error"><message>registration failed</message>` +
      `<field name="password" reason="too short"></field></status>`;
    const payload = decodeStatus(xml);
    expect(payload.code).toBe("error");
    expect(payload.detail).toEqual([{ field: "password", reason: "too short" }]);
  });

  it("rejects unknown codes", () => {
    expect(() =>
      decodeStatus(`<status code="warn"><message>m</message></status>`),
    ).toThrow(DecodeError);
  });
});

describe("decodeSession", () => {
  it("extracts the token", () => {
    expect(decodeSession(`<session token="abc123"></session>`)).toBe("abc123");
  });
});
