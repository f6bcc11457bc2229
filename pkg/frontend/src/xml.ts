/**
 * Tiny XML reader for the server's wire dialect.
 *
 * Deliberately independent of DOMParser so the decoding layer is plain
 * data in, plain data out (and unit-testable off-browser). Handles
 * exactly what the protocol emits: elements, double/single quoted
 * attributes, character data with the five predefined entities plus
 * numeric references, and comments. Anything else is a DecodeError.
 */

export class DecodeError extends Error {}

export interface XmlElement {
  name: string;
  attrs: Record<string, string>;
  children: XmlElement[];
  text: string;
}

const NAMED_ENTITIES: Record<string, string> = {
  amp: "&",
  lt: "<",
  gt: ">",
  quot: '"',
  apos: "'",
};

function decodeEntities(raw: string): string {
  return raw.replace(/&([^;&]{1,32});/g, (whole, body: string) => {
    if (body in NAMED_ENTITIES) return NAMED_ENTITIES[body];
    if (body.startsWith("#x") || body.startsWith("#X")) {
      const cp = parseInt(body.slice(2), 16);
      if (!Number.isNaN(cp)) return String.fromCodePoint(cp);
    } else if (body.startsWith("#")) {
      const cp = parseInt(body.slice(1), 10);
      if (!Number.isNaN(cp)) return String.fromCodePoint(cp);
    }
    throw new DecodeError(`unknown entity &${body};`);
  });
}

export function parseXml(input: string): XmlElement {
  let i = 0;
  const n = input.length;

  function error(message: string): never {
    throw new DecodeError(`${message} at offset ${i}`);
  }

  function skipMisc(): void {
    for (;;) {
      while (i < n && " \t\r\n".includes(input[i])) i++;
      if (input.startsWith("<!--", i)) {
        const end = input.indexOf("-->", i + 4);
        if (end < 0) error("unterminated comment");
        i = end + 3;
      } else if (input.startsWith("<?", i)) {
        const end = input.indexOf("?>", i + 2);
        if (end < 0) error("unterminated declaration");
        i = end + 2;
      } else {
        return;
      }
    }
  }

  function parseName(): string {
    const m = /^[A-Za-z_][A-Za-z0-9_.:-]*/.exec(input.slice(i));
    if (!m) error("expected a name");
    i += m[0].length;
    return m[0];
  }

  function parseElement(): XmlElement {
    if (input[i] !== "<") error("expected an element");
    i++;
    const name = parseName();
    const attrs: Record<string, string> = {};
    for (;;) {
      while (i < n && " \t\r\n".includes(input[i])) i++;
      if (i >= n) error("unterminated tag");
      if (input[i] === ">") {
        i++;
        break;
      }
      if (input.startsWith("/>", i)) {
        i += 2;
        return { name, attrs, children: [], text: "" };
      }
      const attrName = parseName();
      while (i < n && " \t\r\n".includes(input[i])) i++;
      if (input[i] !== "=") error("expected '='");
      i++;
      while (i < n && " \t\r\n".includes(input[i])) i++;
      const quote = input[i];
      if (quote !== '"' && quote !== "'") error("expected a quoted value");
      const close = input.indexOf(quote, i + 1);
      if (close < 0) error("unterminated attribute value");
      attrs[attrName] = decodeEntities(input.slice(i + 1, close));
      i = close + 1;
    }

    const element: XmlElement = { name, attrs, children: [], text: "" };
    for (;;) {
      if (i >= n) error(`element <${name}> never closes`);
      if (input.startsWith("<!--", i)) {
        const end = input.indexOf("-->", i + 4);
        if (end < 0) error("unterminated comment");
        i = end + 3;
      } else if (input.startsWith("</", i)) {
        i += 2;
        const closing = parseName();
        if (closing !== name) error(`mismatched </${closing}>`);
        while (i < n && " \t\r\n".includes(input[i])) i++;
        if (input[i] !== ">") error("unterminated end tag");
        i++;
        return element;
      } else if (input[i] === "<") {
        element.children.push(parseElement());
      } else {
        let next = i;
        while (next < n && input[next] !== "<") next++;
        element.text += decodeEntities(input.slice(i, next));
        i = next;
      }
    }
  }

  skipMisc();
  if (i >= n) throw new DecodeError("empty document");
  const root = parseElement();
  skipMisc();
  if (i < n) error("content after the root element");
  return root;
}
