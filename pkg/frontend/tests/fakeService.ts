/** In-memory stand-in for the study service, speaking the same JSON
 * contract through a fetch-compatible function. Serve timestamps come
 * from Date.now so fake timers control the late flag exactly like the
 * real server's clock does. */

import type { SubmitPayload } from "../src/types.js";

export interface RecordedSubmission extends SubmitPayload {
  late: boolean;
  response_time_s: number;
}

interface FakeSession {
  id: string;
  cursor: number;
  servedAt: Map<number, number>;
  records: RecordedSubmission[];
  acks: Map<number, unknown>;
  status: string;
}

const OBJECTS = ["sink", "refrigerator", "oven_microwave", "table", "chair", "tv_laptop", "bed", "couch"];
const ROOMS = ["bedroom", "kitchen", "dining_room", "living_room"];
const LIKERT = ["DY", "PY", "M", "PN", "DN"];

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function png(): Response {
  return new Response(new Uint8Array([0x89, 0x50, 0x4e, 0x47]), {
    status: 200,
    headers: { "content-type": "image/png" },
  });
}

export class FakeService {
  sessions = new Map<string, FakeSession>();
  mediaRequests: string[] = [];
  /** when > 0, the next submit calls fail at the network level */
  failNextSubmits = 0;

  constructor(
    public trialCount = 4,
    public timeLimitS = 30,
    private now: () => number = () => Date.now(),
  ) {}

  get fetch() {
    return (input: string, init?: RequestInit): Promise<Response> =>
      this.handle(input, init);
  }

  private async handle(url: string, init?: RequestInit): Promise<Response> {
    const method = init?.method ?? "GET";
    let match: RegExpMatchArray | null;

    if (url === "/study/sessions" && method === "POST") {
      const id = `fake-${this.sessions.size + 1}`;
      this.sessions.set(id, {
        id,
        cursor: 0,
        servedAt: new Map(),
        records: [],
        acks: new Map(),
        status: "pending",
      });
      return json({
        session_id: id,
        subject_id: JSON.parse(String(init?.body ?? "{}")).subject_id,
        seed: 7,
        trial_count: this.trialCount,
        time_limit_s: this.timeLimitS,
        status: "pending",
      });
    }

    if ((match = url.match(/^\/study\/sessions\/([^/]+)\/next$/)) && method === "GET") {
      const session = this.sessions.get(match[1]);
      if (!session) return json({ detail: "unknown session" }, 404);
      if (session.cursor >= this.trialCount) {
        return json({ done: true, status: "done", trial: null });
      }
      if (!session.servedAt.has(session.cursor)) {
        session.servedAt.set(session.cursor, this.now());
      }
      session.status = "running";
      const elapsed = (this.now() - (session.servedAt.get(session.cursor) as number)) / 1000;
      return json({
        done: false,
        status: "running",
        trial: {
          trial_index: session.cursor,
          kind: session.cursor % 2 === 0 ? "image" : "video",
          media_url: `/study/sessions/${session.id}/trials/${session.cursor}/media`,
          time_limit_s: this.timeLimitS,
          seconds_remaining: Math.max(0, this.timeLimitS - elapsed),
          form: { object_choices: OBJECTS, room_choices: ROOMS, likert_choices: LIKERT },
        },
      });
    }

    if ((match = url.match(/^\/study\/sessions\/([^/]+)\/responses$/)) && method === "POST") {
      if (this.failNextSubmits > 0) {
        this.failNextSubmits--;
        throw new TypeError("network failure");
      }
      const session = this.sessions.get(match[1]);
      if (!session) return json({ detail: "unknown session" }, 404);
      const payload = JSON.parse(String(init?.body)) as SubmitPayload;
      const prior = session.acks.get(payload.trial_index);
      if (prior && payload.trial_index === session.cursor - 1) {
        return json(prior); // idempotent retry of the acknowledged trial
      }
      if (payload.trial_index !== session.cursor) {
        return json({ detail: "out of order" }, 409);
      }
      const served = session.servedAt.get(payload.trial_index);
      if (served === undefined) return json({ detail: "not served" }, 409);
      const elapsed = (this.now() - served) / 1000;
      const late = elapsed > this.timeLimitS;
      session.records.push({ ...payload, late, response_time_s: elapsed });
      session.cursor += 1;
      session.status = session.cursor >= this.trialCount ? "done" : "running";
      const ack = {
        trial_index: payload.trial_index,
        late,
        cursor: session.cursor,
        status: session.status,
      };
      session.acks.set(payload.trial_index, ack);
      return json(ack);
    }

    if ((match = url.match(/^\/study\/sessions\/[^/]+\/trials\/(\d+)\/media$/)) && method === "GET") {
      this.mediaRequests.push(url);
      const index = Number(match[1]);
      if (index % 2 === 1) {
        return json({
          kind: "video",
          fps: 20,
          frame_count: 3,
          frames: [0, 1, 2].map((k) => url.replace(/\/media$/, `/frames/${k}`)),
        });
      }
      return png();
    }

    if (url.match(/^\/study\/sessions\/[^/]+\/trials\/\d+\/frames\/\d+$/)) {
      this.mediaRequests.push(url);
      return png();
    }

    return json({ detail: `no route for ${method} ${url}` }, 404);
  }
}
