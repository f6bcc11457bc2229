/** Fetch wrappers for the server API; XML in, typed values out. */

import {
  decodeNewsDetail,
  decodeNewsList,
  decodeSession,
  decodeStatus,
  MediaItem,
  StatusPayload,
  Story,
} from "./decode.js";

export class ApiError extends Error {
  constructor(
    public httpStatus: number,
    public payload: StatusPayload | null,
  ) {
    super(payload ? payload.message : `HTTP ${httpStatus}`);
  }
}

async function statusOf(response: Response): Promise<StatusPayload | null> {
  try {
    return decodeStatus(await response.text());
  } catch {
    return null;
  }
}

export class Api {
  constructor(private baseUrl: string = "") {}

  private async get(path: string, token?: string | null): Promise<string> {
    const headers: Record<string, string> = {};
    if (token) headers["X-Auth-Token"] = token;
    const response = await fetch(this.baseUrl + path, { headers });
    if (!response.ok) throw new ApiError(response.status, await statusOf(response));
    return response.text();
  }

  private async postForm(
    path: string,
    fields: Record<string, string>,
    token?: string | null,
  ): Promise<Response> {
    const headers: Record<string, string> = {
      "Content-Type": "application/x-www-form-urlencoded",
    };
    if (token) headers["X-Auth-Token"] = token;
    return fetch(this.baseUrl + path, {
      method: "POST",
      headers,
      body: new URLSearchParams(fields).toString(),
    });
  }

  async listMessages(token?: string | null): Promise<Story[]> {
    return decodeNewsList(await this.get("/api/messages", token));
  }

  async getMessage(
    id: number,
    token?: string | null,
  ): Promise<{ story: Story; media: MediaItem[] }> {
    return decodeNewsDetail(await this.get(`/api/message/${id}`, token));
  }

  async login(username: string, password: string): Promise<string> {
    const response = await this.postForm("/api/login", { username, password });
    if (!response.ok) throw new ApiError(response.status, await statusOf(response));
    return decodeSession(await response.text());
  }

  async setStatus(
    id: number,
    status: "active" | "inactive",
    token: string,
  ): Promise<StatusPayload> {
    const response = await this.postForm(
      `/api/admin/message/${id}/status`,
      { status },
      token,
    );
    const payload = await statusOf(response);
    if (!response.ok) throw new ApiError(response.status, payload);
    if (!payload) throw new ApiError(response.status, null);
    return payload;
  }

  async deleteMessage(id: number, token: string): Promise<StatusPayload> {
    const headers: Record<string, string> = { "X-Auth-Token": token };
    const response = await fetch(this.baseUrl + `/api/admin/message/${id}`, {
      method: "DELETE",
      headers,
    });
    const payload = await statusOf(response);
    if (!response.ok) throw new ApiError(response.status, payload);
    if (!payload) throw new ApiError(response.status, null);
    return payload;
  }

  async register(fields: {
    first_name: string;
    last_name: string;
    username: string;
    password: string;
  }): Promise<StatusPayload> {
    const response = await this.postForm("/api/register", fields);
    const payload = await statusOf(response);
    if (!payload) throw new ApiError(response.status, null);
    return payload; // 422 payloads carry the per-field detail
  }

  mediaUrl(messageId: number, mediaId: number): string {
    return `${this.baseUrl}/api/media/${messageId}/${mediaId}`;
  }
}
