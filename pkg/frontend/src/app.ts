/**
 * The dashboard itself: hash-routed views over the server API.
 *
 *   #/            public main page (active stories, newest first)
 *   #/story/<id>  full story with inline media
 *   #/admin       login, status toggles, delete, registration form
 *
 * Every piece of server-supplied text enters the DOM through el()'s
 * string children, which become text nodes, so markup in a story body
 * can never execute.
 */

import { Api, ApiError } from "./api.js";
import { MediaItem, Story } from "./decode.js";
import {
  applyToggle,
  buildRows,
  fieldErrors,
  formatDate,
  ListState,
  removeRow,
  revertToggle,
  settleRow,
  StoryRow,
} from "./viewmodel.js";

// Same-origin by default; a static host serving the UI elsewhere (or a
// test harness) can point it at the server before the module loads.
const api = new Api(
  ((globalThis as { NEWSDESK_BASE?: string }).NEWSDESK_BASE) ?? "",
);

type Child = Node | string;

export function el(
  tag: string,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElement {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  for (const child of children) {
    node.append(
      typeof child === "string" ? document.createTextNode(child) : child,
    );
  }
  return node;
}

function mount(...children: Child[]): void {
  const root = document.getElementById("app")!;
  root.replaceChildren();
  for (const child of children) {
    root.append(typeof child === "string" ? document.createTextNode(child) : child);
  }
}

function errorBanner(message: string, retry: () => void): HTMLElement {
  const button = el("button", {}, "retry");
  button.addEventListener("click", retry);
  return el("div", { class: "banner error" }, message + " ", button);
}

function header(active: string): HTMLElement {
  return el(
    "header",
    {},
    el("h1", {}, "Newsdesk"),
    el(
      "nav",
      {},
      el("a", { href: "#/", class: active === "main" ? "active" : "" }, "stories"),
      " ",
      el("a", { href: "#/admin", class: active === "admin" ? "active" : "" }, "admin"),
    ),
  );
}

// -- public main page ---------------------------------------------------

function storyRowElement(row: StoryRow): HTMLElement {
  const thumb =
    row.thumb !== null
      ? el("img", {
          class: "thumb",
          src: api.mediaUrl(row.id, row.thumb),
          alt: "",
        })
      : el("div", { class: "thumb placeholder" }, "no image");
  return el(
    "li",
    { class: "story", "data-id": String(row.id) },
    thumb,
    el(
      "div",
      {},
      el("a", { href: `#/story/${row.id}`, class: "title" }, row.title),
      el(
        "div",
        { class: "meta" },
        `${row.author} · ${row.category} · ${formatDate(row.created)}`,
      ),
    ),
  );
}

export async function renderMainPage(): Promise<void> {
  mount(header("main"), el("p", {}, "loading…"));
  let stories: Story[];
  try {
    stories = await api.listMessages();
  } catch (exc) {
    mount(header("main"), errorBanner(`cannot load stories: ${exc}`, renderMainPage));
    return;
  }
  const rows = buildRows(stories, "viewer");
  if (!rows.length) {
    mount(header("main"), el("p", { class: "empty" }, "no stories yet"));
    return;
  }
  mount(
    header("main"),
    el("ul", { class: "stories" }, ...rows.map(storyRowElement)),
  );
}

// -- story detail ---------------------------------------------------------

function mediaElement(story: Story, item: MediaItem): HTMLElement {
  const url = api.mediaUrl(story.id, item.id);
  if (item.kind === "image") {
    return el("img", { class: "inline-media", src: url, alt: "" });
  }
  if (item.kind === "audio") {
    return el("p", {}, el("a", { href: url }, `audio clip (${item.format})`));
  }
  return el("p", {}, el("a", { href: url }, `${item.kind} (${item.format})`));
}

export async function renderDetail(id: number): Promise<void> {
  mount(header("main"), el("p", {}, "loading…"));
  try {
    const { story, media } = await api.getMessage(id);
    mount(
      header("main"),
      el(
        "article",
        {},
        el("h2", {}, story.title),
        el(
          "div",
          { class: "meta" },
          `${story.author} · ${story.place} · ${story.category} · ` +
            formatDate(story.created),
        ),
        // Body text is a text node: markup inside stays inert.
        el("p", { class: "body" }, story.body),
        ...media.map((item) => mediaElement(story, item)),
      ),
    );
  } catch (exc) {
    if (exc instanceof ApiError && exc.httpStatus === 404) {
      mount(header("main"), el("p", { class: "empty" }, "story not found"));
      return;
    }
    mount(header("main"), errorBanner(`cannot load story: ${exc}`, () => renderDetail(id)));
  }
}

// -- admin panel ------------------------------------------------------------

const state: ListState = { mode: "admin", session: null, rows: [], error: null };
export const confirmDelete: { ask: (title: string) => boolean } = {
  ask: (title) => window.confirm(`Delete "${title}" permanently?`),
};

function loginForm(message = ""): HTMLElement {
  const username = el("input", { name: "username" }) as HTMLInputElement;
  const password = el("input", {
    name: "password",
    type: "password",
  }) as HTMLInputElement;
  const note = el("p", { class: "form-error" }, message);
  const button = el("button", {}, "log in");
  button.addEventListener("click", async () => {
    try {
      state.session = await api.login(username.value, password.value);
      await renderAdmin();
    } catch {
      note.textContent = "login failed";
    }
  });
  return el(
    "div",
    { class: "login" },
    el("h2", {}, "admin login"),
    el("label", {}, "username ", username),
    el("label", {}, "password ", password),
    button,
    note,
  );
}

function adminRowElement(row: StoryRow): HTMLElement {
  const badge = el(
    "span",
    { class: `badge ${row.status}` },
    row.status ?? "",
  );
  const toggle = el(
    "button",
    row.pending ? { class: "toggle", disabled: "disabled" } : { class: "toggle" },
    row.status === "active" ? "deactivate" : "activate",
  );
  toggle.addEventListener("click", () => void toggleStatus(row.id));
  const remove = el(
    "button",
    row.pending
      ? { class: "danger delete", disabled: "disabled" }
      : { class: "danger delete" },
    "delete",
  );
  remove.addEventListener("click", () => void deleteStory(row.id, row.title));
  return el(
    "li",
    { class: "story admin", "data-id": String(row.id) },
    el(
      "div",
      {},
      el("a", { href: `#/story/${row.id}`, class: "title" }, row.title),
      el("div", { class: "meta" }, `${row.author} · ${row.category}`),
    ),
    badge,
    toggle,
    remove,
  );
}

async function toggleStatus(id: number): Promise<void> {
  const row = state.rows.find((r) => r.id === id);
  if (!row || row.pending || !state.session) return;
  const target = row.status === "active" ? "inactive" : "active";
  state.rows = applyToggle(state.rows, id);
  paintAdmin();
  try {
    await api.setStatus(id, target, state.session);
    state.rows = settleRow(state.rows, id);
  } catch (exc) {
    state.rows = revertToggle(state.rows, id);
    state.error = `status change failed: ${exc}`;
    if (exc instanceof ApiError && (exc.httpStatus === 401 || exc.httpStatus === 403)) {
      state.session = null;
    }
  }
  await renderAdmin(false);
}

async function deleteStory(id: number, title: string): Promise<void> {
  const row = state.rows.find((r) => r.id === id);
  if (!row || row.pending || !state.session) return;
  if (!confirmDelete.ask(title)) return; // cancel: no request at all
  try {
    await api.deleteMessage(id, state.session);
    state.rows = removeRow(state.rows, id);
  } catch (exc) {
    state.error = `delete failed: ${exc}`;
  }
  await renderAdmin(false);
}

function registrationForm(): HTMLElement {
  const inputs: Record<string, HTMLInputElement> = {};
  const notes: Record<string, HTMLElement> = {};
  const rows: HTMLElement[] = [];
  for (const field of ["first_name", "last_name", "username", "password"]) {
    inputs[field] = el("input", {
      name: field,
      ...(field === "password" ? { type: "password" } : {}),
    }) as HTMLInputElement;
    notes[field] = el("span", { class: "form-error", "data-for": field });
    rows.push(
      el("label", {}, field.replace("_", " ") + " ", inputs[field], notes[field]),
    );
  }
  const outcome = el("p", {});
  const submit = el("button", {}, "register user");
  submit.addEventListener("click", async () => {
    for (const note of Object.values(notes)) note.textContent = "";
    outcome.textContent = "";
    try {
      const payload = await api.register({
        first_name: inputs.first_name.value,
        last_name: inputs.last_name.value,
        username: inputs.username.value,
        password: inputs.password.value,
      });
      if (payload.code === "ok") {
        outcome.textContent = payload.message;
      } else {
        const errors = fieldErrors(payload.detail);
        for (const [field, reason] of Object.entries(errors)) {
          if (notes[field]) notes[field].textContent = reason;
        }
        if (!payload.detail.length) outcome.textContent = payload.message;
      }
    } catch (exc) {
      outcome.textContent = `registration failed: ${exc}`;
    }
  });
  return el(
    "div",
    { class: "register" },
    el("h2", {}, "register a reporter"),
    ...rows,
    submit,
    outcome,
  );
}

function paintAdmin(): void {
  const banner = state.error ? [el("div", { class: "banner error" }, state.error)] : [];
  state.error = null;
  mount(
    header("admin"),
    ...banner,
    el("ul", { class: "stories" }, ...state.rows.map(adminRowElement)),
    registrationForm(),
  );
}

export async function renderAdmin(refetch = true): Promise<void> {
  if (!state.session) {
    mount(header("admin"), loginForm());
    return;
  }
  if (refetch) {
    try {
      const stories = await api.listMessages(state.session);
      state.rows = buildRows(stories, "admin");
    } catch (exc) {
      mount(
        header("admin"),
        errorBanner(`cannot load stories: ${exc}`, () => void renderAdmin()),
      );
      return;
    }
  }
  paintAdmin();
}

// -- routing ------------------------------------------------------------------

export function route(): void {
  const hash = window.location.hash || "#/";
  const detail = /^#\/story\/(\d+)$/.exec(hash);
  if (detail) {
    void renderDetail(Number(detail[1]));
  } else if (hash === "#/admin") {
    void renderAdmin();
  } else {
    void renderMainPage();
  }
}

if (typeof window !== "undefined" && document.getElementById("app")) {
  window.addEventListener("hashchange", route);
  route();
}
