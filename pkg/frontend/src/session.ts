import { StudyApi } from "./api.js";
import { clear, el } from "./dom.js";
import { TrialController } from "./trial.js";
import type { SubmitAck } from "./types.js";

/** Walks a subject through a whole session: instructions first, then
 * one trial at a time (the next trial's media preloads in the
 * background), and a completion screen at the end. */
export class SessionRunner {
  readonly acks: SubmitAck[] = [];

  constructor(
    private root: HTMLElement,
    private api: StudyApi,
    private now?: () => number,
  ) {}

  async start(subjectId: string, meta: Record<string, string> = {}): Promise<SubmitAck[]> {
    const session = await this.api.createSession(subjectId, meta);
    this.showInstructions(session.trial_count, session.time_limit_s);
    await this.waitForBegin();
    for (;;) {
      const next = await this.api.next(session.session_id);
      if (next.done || !next.trial) {
        this.showCompletion();
        return this.acks;
      }
      const trial = next.trial;
      if (trial.trial_index + 1 < session.trial_count) {
        void this.api.preload(this.mediaUrlFor(trial.media_url, trial.trial_index + 1));
      }
      const controller = new TrialController(
        this.root,
        this.api,
        session.session_id,
        trial,
        this.now,
      );
      this.acks.push(await controller.run());
    }
  }

  /** Media URLs are indexed by trial, so the one-ahead URL is derivable. */
  private mediaUrlFor(currentUrl: string, trialIndex: number): string {
    return currentUrl.replace(/\/trials\/\d+\/media$/, `/trials/${trialIndex}/media`);
  }

  private showInstructions(trialCount: number, timeLimit: number): void {
    clear(this.root);
    this.root.append(
      el("section", { class: "screen" }, [
        el("h1", {}, ["Room and object recognition"]),
        el("p", {}, [
          `You will see ${trialCount} short examples (still images and videos) rendered as ` +
            "dot patterns. For each one, mark the objects you recognized, pick the type of " +
            "room, and rate how certain you are.",
        ]),
        el("p", {}, [
          `Each example stays on screen for up to ${timeLimit} seconds; videos repeat until ` +
            "the time runs out. Take a few minutes with the operator to get familiar with " +
            "the procedure before you begin. Sit about one meter from the screen.",
        ]),
        el("button", { class: "submit", id: "begin" }, ["Begin"]),
      ]),
    );
  }

  private waitForBegin(): Promise<void> {
    return new Promise((resolve) => {
      const button = this.root.querySelector("#begin");
      button?.addEventListener("click", () => resolve(), { once: true });
    });
  }

  private showCompletion(): void {
    clear(this.root);
    this.root.append(
      el("section", { class: "screen" }, [
        el("h1", {}, ["All done"]),
        el("p", {}, ["Thank you for taking part. Please let the operator know you finished."]),
      ]),
    );
  }
}
