/** Level-meter ballistics: instant attack, 300 ms linear decay.
 *
 * Telemetry arrives at 10 Hz; without ballistics the meters would
 * flicker block-to-block. A new level above the displayed value snaps
 * the meter up immediately; below it, the displayed value slides down
 * so that it reaches zero 300 ms after the peak.
 */

export const METER_DECAY_MS = 300;

export class Meter {
  private displayed = 0;
  private peak = 0;
  private lastUpdateMs: number | null = null;

  constructor(private readonly decayMs: number = METER_DECAY_MS) {}

  update(level: number, nowMs: number): number {
    if (this.lastUpdateMs !== null && this.displayed > 0) {
      const dt = nowMs - this.lastUpdateMs;
      this.displayed = Math.max(0, this.displayed - (this.peak * dt) / this.decayMs);
    }
    if (level >= this.displayed) {
      this.displayed = level;
      this.peak = level;
    }
    this.lastUpdateMs = nowMs;
    return this.displayed;
  }

  /** Current displayed value without feeding a new level (meters freeze
   * on disconnect, so there is deliberately no time-based read). */
  value(): number {
    return this.displayed;
  }

  reset(): void {
    this.displayed = 0;
    this.peak = 0;
    this.lastUpdateMs = null;
  }
}
