import type { VideoManifest } from "./types.js";

/** Plays a frame-manifest video by cycling an <img> through the frame
 * URLs at the manifest's fps. Playback loops until stopped, so the
 * subject can keep re-watching within the trial's time window. */
export class FramePlayer {
  private timer: ReturnType<typeof setInterval> | null = null;
  private index = 0;

  constructor(
    private img: HTMLImageElement,
    private manifest: VideoManifest,
    private base: string = "",
  ) {}

  start(): void {
    this.stop();
    this.index = 0;
    this.show();
    const interval = 1000 / this.manifest.fps;
    this.timer = setInterval(() => {
      this.index = (this.index + 1) % this.manifest.frames.length;
      this.show();
    }, interval);
  }

  private show(): void {
    this.img.src = this.base + this.manifest.frames[this.index];
  }

  get frameIndex(): number {
    return this.index;
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
