import type {
  FetchLike,
  NextTrialResponse,
  SessionInfo,
  SubmitAck,
  SubmitPayload,
  VideoManifest,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

const SUBMIT_RETRIES = 4;
const RETRY_DELAY_MS = 500;

/** Thin client for the study endpoints. Submissions retry on network
 * failure with the same payload; the server acknowledges a trial index
 * exactly once, so retries are safe. */
export class StudyApi {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
    private delay: (ms: number) => Promise<void> = (ms) => new Promise((r) => setTimeout(r, ms)),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        detail = ((await response.json()) as { detail?: string }).detail ?? detail;
      } catch {
        /* non-json error body */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  createSession(subjectId: string, meta: Record<string, string> = {}): Promise<SessionInfo> {
    return this.request<SessionInfo>("/study/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ subject_id: subjectId, meta }),
    });
  }

  next(sessionId: string): Promise<NextTrialResponse> {
    return this.request<NextTrialResponse>(`/study/sessions/${sessionId}/next`);
  }

  async submit(sessionId: string, payload: SubmitPayload): Promise<SubmitAck> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= SUBMIT_RETRIES; attempt++) {
      try {
        return await this.request<SubmitAck>(`/study/sessions/${sessionId}/responses`, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify(payload),
        });
      } catch (err) {
        if (err instanceof ApiError) throw err; // the server answered; don't re-send
        lastError = err; // network failure: retry the identical record
        await this.delay(RETRY_DELAY_MS);
      }
    }
    throw lastError;
  }

  /** Fetch a trial's media URL; videos answer with a frame manifest. */
  async media(url: string): Promise<{ kind: "image"; url: string } | VideoManifest> {
    const response = await this.fetchFn(this.base + url);
    if (!response.ok) throw new ApiError(response.status, `media fetch failed: ${response.status}`);
    const type = response.headers.get("content-type") ?? "";
    if (type.includes("application/json")) {
      return (await response.json()) as VideoManifest;
    }
    return { kind: "image", url: this.base + url };
  }

  /** Warm the browser cache for a media URL (used to preload one trial ahead). */
  async preload(url: string): Promise<void> {
    try {
      const media = await this.media(url);
      if (media.kind === "video") {
        await Promise.all(media.frames.map((frame) => this.fetchFn(this.base + frame)));
      }
    } catch {
      /* preloading is best-effort */
    }
  }
}
