import { StudyApi } from "./api.js";
import { Countdown } from "./countdown.js";
import { clear, el } from "./dom.js";
import { likertLabel, objectLabel, roomLabel } from "./labels.js";
import { FramePlayer } from "./player.js";
import type { SubmitAck, TrialDescriptor } from "./types.js";

/** Runs one trial: shows the stimulus, collects the responses and
 * submits exactly one record.
 *
 * The submit button unlocks only once a room and a confidence level are
 * chosen. When the countdown expires the stimulus is taken down; if the
 * form is already complete it auto-submits right away, otherwise it
 * submits the moment the subject completes it. Either way the server
 * flags the record late from its own clock.
 */
export class TrialController {
  private checked = new Set<string>();
  private room: string | null = null;
  private likert: string | null = null;
  private expired = false;
  private submitted = false;
  private player: FramePlayer | null = null;
  private submitBtn!: HTMLButtonElement;
  private statusLine!: HTMLElement;
  private stage!: HTMLElement;
  private resolve!: (ack: SubmitAck) => void;
  private reject!: (err: unknown) => void;
  private countdown: Countdown;

  constructor(
    private root: HTMLElement,
    private api: StudyApi,
    private sessionId: string,
    private descriptor: TrialDescriptor,
    now?: () => number,
  ) {
    this.countdown = new Countdown(
      (left) => this.renderClock(left),
      () => this.onExpire(),
      now,
    );
  }

  async run(): Promise<SubmitAck> {
    const done = new Promise<SubmitAck>((resolve, reject) => {
      this.resolve = resolve;
      this.reject = reject;
    });
    this.render();
    await this.showStimulus();
    this.countdown.start(this.descriptor.seconds_remaining);
    return done;
  }

  private render(): void {
    clear(this.root);
    const d = this.descriptor;
    this.stage = el("div", { class: "stage" });
    this.statusLine = el("p", { class: "status" });

    const objectBoxes = el(
      "fieldset",
      { class: "choices" },
      [
        el("legend", {}, ["Which objects did you see?"]),
        ...d.form.object_choices.map((id) => this.checkbox(id)),
      ],
    );
    const roomRadios = el(
      "fieldset",
      { class: "choices" },
      [
        el("legend", {}, ["Which type of room is it?"]),
        ...d.form.room_choices.map((id) => this.radio("room", id, roomLabel(id), (v) => {
          this.room = v;
          this.refreshSubmit();
        })),
      ],
    );
    const likertRadios = el(
      "fieldset",
      { class: "choices" },
      [
        el("legend", {}, ["How certain are you about the room?"]),
        ...d.form.likert_choices.map((id) => this.radio("likert", id, likertLabel(id), (v) => {
          this.likert = v;
          this.refreshSubmit();
        })),
      ],
    );

    this.submitBtn = el("button", { class: "submit", disabled: "true" }, ["Submit answers"]);
    this.submitBtn.addEventListener("click", () => void this.trySubmit());

    this.root.append(
      el("header", { class: "trial-header" }, [
        el("span", {}, [`Trial ${d.trial_index + 1}`]),
        el("span", { class: "clock", id: "clock" }, [""]),
      ]),
      this.stage,
      el("form", { class: "response-form" }, [objectBoxes, roomRadios, likertRadios]),
      this.submitBtn,
      this.statusLine,
    );
  }

  private checkbox(id: string): HTMLElement {
    const input = el("input", { type: "checkbox", value: id }) as HTMLInputElement;
    input.addEventListener("change", () => {
      if (input.checked) this.checked.add(id);
      else this.checked.delete(id);
    });
    return el("label", { class: "choice" }, [input, objectLabel(id)]);
  }

  private radio(
    group: string,
    id: string,
    label: string,
    onPick: (value: string) => void,
  ): HTMLElement {
    const input = el("input", { type: "radio", name: group, value: id }) as HTMLInputElement;
    input.addEventListener("change", () => {
      if (input.checked) onPick(id);
    });
    return el("label", { class: "choice" }, [input, label]);
  }

  private async showStimulus(): Promise<void> {
    const media = await this.api.media(this.descriptor.media_url);
    const img = el("img", { class: "stimulus", alt: "stimulus" }) as HTMLImageElement;
    this.stage.append(img);
    if (media.kind === "image") {
      img.src = media.url;
    } else {
      this.player = new FramePlayer(img, media);
      this.player.start();
    }
  }

  private renderClock(left: number): void {
    const clock = this.root.querySelector("#clock");
    if (clock) clock.textContent = this.expired ? "time is up" : `${Math.ceil(left)} s`;
  }

  private formComplete(): boolean {
    return this.room !== null && this.likert !== null;
  }

  private refreshSubmit(): void {
    this.submitBtn.disabled = !this.formComplete() || this.submitted;
    if (this.expired && this.formComplete()) void this.trySubmit();
  }

  private onExpire(): void {
    this.expired = true;
    if (this.player) this.player.stop();
    clear(this.stage);
    this.renderClock(0);
    if (this.formComplete()) {
      void this.trySubmit();
    } else {
      this.statusLine.textContent =
        "Time expired. Please still pick a room and a confidence level to continue.";
    }
  }

  private async trySubmit(): Promise<void> {
    if (this.submitted || !this.formComplete()) return;
    this.submitted = true;
    this.submitBtn.disabled = true;
    this.countdown.stop();
    if (this.player) this.player.stop();
    try {
      const ack = await this.api.submit(this.sessionId, {
        trial_index: this.descriptor.trial_index,
        objects_marked: [...this.checked].sort(),
        room_choice: this.room as string,
        likert: this.likert as string,
      });
      this.resolve(ack);
    } catch (err) {
      this.reject(err);
    }
  }
}
