/** Thin typed client over the annotation service's member routes.
 *
 * The client speaks exactly two endpoints — POST /auth/login and
 * GET/POST /members/{uid}/skills — and nothing else; member sessions have
 * no business with the operator-only routes.
 */

import type { WireSkillRow } from "./model.js";

export interface LoginResponse {
  token: string;
  user_id: string;
  expires_at: string;
}

export interface SubmitResponse {
  accepted: number;
}

export interface SkillRating {
  term: string;
  self_score: number;
}

/** A failed request, carrying the service's machine-readable error code. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }

  get sessionExpired(): boolean {
    return this.status === 401 && this.code === "session_expired";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Parse the service's error envelope: {"detail": {"code", "message"}}. */
async function readError(response: Response): Promise<ApiError> {
  let code = `http_${response.status}`;
  let message = response.statusText || `request failed with ${response.status}`;
  try {
    const body = (await response.json()) as { detail?: { code?: string; message?: string } };
    if (body && typeof body.detail === "object" && body.detail !== null) {
      if (typeof body.detail.code === "string") {
        code = body.detail.code;
      }
      if (typeof body.detail.message === "string") {
        message = body.detail.message;
      }
    }
  } catch {
    // Non-JSON error body; keep the status-derived fallback.
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  #token: string | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  get token(): string | null {
    return this.#token;
  }

  logout(): void {
    this.#token = null;
  }

  async login(email: string, password: string): Promise<LoginResponse> {
    const response = await this.fetchImpl(`${this.baseUrl}/auth/login`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ email, password }),
    });
    if (!response.ok) {
      throw await readError(response);
    }
    const body = (await response.json()) as LoginResponse;
    this.#token = body.token;
    return body;
  }

  async getSkills(userId: string): Promise<WireSkillRow[]> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/members/${encodeURIComponent(userId)}/skills`,
      { headers: this.#authHeaders() },
    );
    if (!response.ok) {
      throw await readError(response);
    }
    return (await response.json()) as WireSkillRow[];
  }

  async submitRatings(userId: string, ratings: readonly SkillRating[]): Promise<SubmitResponse> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/members/${encodeURIComponent(userId)}/skills`,
      {
        method: "POST",
        headers: { "content-type": "application/json", ...this.#authHeaders() },
        body: JSON.stringify(ratings),
      },
    );
    if (!response.ok) {
      throw await readError(response);
    }
    return (await response.json()) as SubmitResponse;
  }

  #authHeaders(): Record<string, string> {
    return this.#token === null ? {} : { authorization: `Bearer ${this.#token}` };
  }
}
