// Trailing-edge debouncer for the edit -> PUT -> re-render loop.

export class Debouncer {
  private handle: ReturnType<typeof setTimeout> | undefined;
  private running = 0;

  constructor(readonly delayMs: number) {}

  // schedule op, replacing any not-yet-fired one
  schedule(op: () => void | Promise<void>): void {
    if (this.handle !== undefined) clearTimeout(this.handle);
    this.handle = setTimeout(() => {
      this.handle = undefined;
      this.running += 1;
      Promise.resolve(op()).finally(() => {
        this.running -= 1;
      });
    }, this.delayMs);
  }

  get settled(): boolean {
    return this.handle === undefined && this.running === 0;
  }
}
