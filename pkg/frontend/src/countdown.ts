/** Per-trial countdown. Starts from the server-reported remaining time,
 * so a refetched trial never gets its clock reset, and it can only count
 * down from there (never above the served limit). */
export class Countdown {
  private timer: ReturnType<typeof setInterval> | null = null;
  private deadline = 0;
  private expired = false;

  constructor(
    private onTick: (secondsLeft: number) => void,
    private onExpire: () => void,
    private now: () => number = () => Date.now(),
  ) {}

  start(secondsRemaining: number): void {
    this.stop();
    this.expired = false;
    this.deadline = this.now() + Math.max(0, secondsRemaining) * 1000;
    this.onTick(this.secondsLeft());
    this.timer = setInterval(() => this.tick(), 250);
    if (secondsRemaining <= 0) this.tick();
  }

  secondsLeft(): number {
    return Math.max(0, (this.deadline - this.now()) / 1000);
  }

  private tick(): void {
    const left = this.secondsLeft();
    this.onTick(left);
    if (left <= 0 && !this.expired) {
      this.expired = true;
      this.stop();
      this.onExpire();
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
