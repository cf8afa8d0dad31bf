/** Trailing-edge debouncer with injectable timer functions for tests. */

export interface TimerHost {
  setTimeout(fn: () => void, ms: number): unknown;
  clearTimeout(handle: unknown): void;
}

export class Debouncer {
  private handle: unknown = null;

  constructor(
    private readonly intervalMs: number,
    private readonly timers: TimerHost = globalThis,
  ) {}

  /** Schedule `fn`; a newer call within the interval supersedes it. */
  schedule(fn: () => void): void {
    if (this.handle !== null) {
      this.timers.clearTimeout(this.handle);
    }
    this.handle = this.timers.setTimeout(() => {
      this.handle = null;
      fn();
    }, this.intervalMs);
  }

  cancel(): void {
    if (this.handle !== null) {
      this.timers.clearTimeout(this.handle);
      this.handle = null;
    }
  }
}
