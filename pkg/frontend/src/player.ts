// Topic player core: pulls the next directive from the API, records the
// delivered trace, and forwards completions. It holds no adaptation
// logic of its own, so driving it headlessly reproduces the server's
// session trace exactly.

import { ApiError, NextStep, SessionView } from './api.js';

/** The slice of the API the player needs; satisfied by Api. */
export interface SessionApi {
  nextStep(sessionId: string): Promise<NextStep>;
  completeStep(
    sessionId: string,
    stepId: string,
    submission?: string,
    participants?: string[],
  ): Promise<SessionView>;
}

export type PlayerStatus = 'idle' | 'showing' | 'blocked' | 'done';

export interface PlayerView {
  status: PlayerStatus;
  step: NextStep | null;
  trace: string[]; // "topic/step" in delivery order
  error?: string;
}

export class PlayerCore {
  private trace: string[] = [];
  private current: NextStep | null = null;
  private status: PlayerStatus = 'idle';
  private error?: string;

  constructor(private api: SessionApi, private sessionId: string) {}

  view(): PlayerView {
    return { status: this.status, step: this.current, trace: [...this.trace], error: this.error };
  }

  /** Fetch the pending directive (clears a blocked state). */
  async refresh(): Promise<PlayerView> {
    const step = await this.api.nextStep(this.sessionId);
    this.error = undefined;
    if (step.done) {
      this.current = null;
      this.status = 'done';
    } else {
      const path = `${step.topic_id}/${step.step_id}`;
      if (this.trace[this.trace.length - 1] !== path) this.trace.push(path);
      this.current = step;
      this.status = 'showing';
    }
    return this.view();
  }

  /** Complete the visible step; a conflict leaves the player blocked
   * (advance disabled) until the next refresh. */
  async advance(submission?: string, participants?: string[]): Promise<PlayerView> {
    if (this.status !== 'showing' || !this.current) {
      throw new Error('nothing to advance');
    }
    try {
      await this.api.completeStep(this.sessionId, this.current.step_id!, submission, participants);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.status = 'blocked';
        this.error = err.detail;
        return this.view();
      }
      throw err;
    }
    return this.refresh();
  }
}

/** Drive a session to completion, answering submissions with
 * `submissionText`. Returns the delivered trace. */
export async function driveToCompletion(
  api: SessionApi,
  sessionId: string,
  submissionText = 'console work',
): Promise<string[]> {
  const player = new PlayerCore(api, sessionId);
  let view = await player.refresh();
  while (view.status === 'showing') {
    view = await player.advance(view.step?.submission_required ? submissionText : undefined);
    if (view.status === 'blocked') {
      throw new Error(`player blocked: ${view.error}`);
    }
  }
  return view.trace;
}
