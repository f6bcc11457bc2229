/** Typed views over the server's XML payloads. */

import { DecodeError, parseXml, XmlElement } from "./xml.js";

export interface Story {
  id: number;
  title: string;
  author: string;
  place: string;
  category: string;
  body: string;
  created: Date;
  status: "active" | "inactive";
  mediaCount: number;
  thumb: number | null;
}

export interface MediaItem {
  id: number;
  kind: string;
  format: string;
  length: number;
}

export interface StatusPayload {
  code: "ok" | "error";
  message: string;
  detail: Array<{ field: string; reason: string }>;
}

function intAttr(elem: XmlElement, name: string): number {
  const raw = elem.attrs[name];
  if (raw === undefined) throw new DecodeError(`<${elem.name}> missing ${name}`);
  const value = Number(raw);
  if (!Number.isInteger(value)) {
    throw new DecodeError(`<${elem.name}> has non-numeric ${name}`);
  }
  return value;
}

function childMap(elem: XmlElement): Map<string, XmlElement> {
  const map = new Map<string, XmlElement>();
  for (const child of elem.children) {
    if (map.has(child.name)) throw new DecodeError(`duplicate <${child.name}>`);
    map.set(child.name, child);
  }
  return map;
}

function text(children: Map<string, XmlElement>, name: string): string {
  const child = children.get(name);
  if (!child) throw new DecodeError(`<news> missing <${name}>`);
  return child.text;
}

function decodeStory(elem: XmlElement): Story {
  if (elem.name !== "news") throw new DecodeError(`expected <news>, got <${elem.name}>`);
  const children = childMap(elem);
  const media = children.get("media");
  if (!media) throw new DecodeError("<news> missing <media>");
  const status = text(children, "status");
  if (status !== "active" && status !== "inactive") {
    throw new DecodeError(`unknown status ${status}`);
  }
  const created = new Date(text(children, "created"));
  if (Number.isNaN(created.getTime())) {
    throw new DecodeError("bad created timestamp");
  }
  return {
    id: intAttr(elem, "id"),
    title: text(children, "title"),
    author: text(children, "author"),
    place: text(children, "place"),
    category: text(children, "category"),
    body: text(children, "body"),
    created,
    status,
    mediaCount: intAttr(media, "count"),
    thumb: media.attrs.thumb !== undefined ? Number(media.attrs.thumb) : null,
  };
}

export function decodeNewsList(xml: string): Story[] {
  const root = parseXml(xml);
  if (root.name !== "newslist") {
    throw new DecodeError(`expected <newslist>, got <${root.name}>`);
  }
  return root.children.map(decodeStory);
}

export function decodeNewsDetail(xml: string): { story: Story; media: MediaItem[] } {
  const root = parseXml(xml);
  const story = decodeStory(root);
  const mediaElem = childMap(root).get("media")!;
  const media = mediaElem.children.map((item) => {
    if (item.name !== "item") throw new DecodeError(`unexpected <${item.name}>`);
    return {
      id: intAttr(item, "id"),
      kind: item.attrs.kind ?? "",
      format: item.attrs.format ?? "",
      length: intAttr(item, "length"),
    };
  });
  return { story, media };
}

export function decodeStatus(xml: string): StatusPayload {
  const root = parseXml(xml);
  if (root.name !== "status") {
    throw new DecodeError(`expected <status>, got <${root.name}>`);
  }
  const code = root.attrs.code;
  if (code !== "ok" && code !== "error") {
    throw new DecodeError(`unknown status code ${code}`);
  }
  let message: string | null = null;
  const detail: Array<{ field: string; reason: string }> = [];
  for (const child of root.children) {
    if (child.name === "message") message = child.text;
    else if (child.name === "field") {
      detail.push({
        field: child.attrs.name ?? "",
        reason: child.attrs.reason ?? "",
      });
    } else throw new DecodeError(`unexpected <${child.name}> in <status>`);
  }
  if (message === null) throw new DecodeError("<status> missing <message>");
  return { code, message, detail };
}

export function decodeSession(xml: string): string {
  const root = parseXml(xml);
  if (root.name !== "session" || root.attrs.token === undefined) {
    throw new DecodeError("expected <session token=..>");
  }
  return root.attrs.token;
}
