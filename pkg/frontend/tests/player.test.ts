// Headless equivalence: the player driven against recorded API
// exchanges must reproduce the server-side session trace exactly.

import { describe, expect, it } from 'vitest';

import { ApiError, NextStep, SessionView } from '../src/api.js';
import { PlayerCore, SessionApi, driveToCompletion } from '../src/player.js';
import sessionsFixture from './fixtures/sessions.json';

interface RecordedSession {
  method: string;
  exchanges: NextStep[];
  trace: string[];
  rejection: { status: number; body: { detail: string } };
}

const sessions = sessionsFixture as unknown as Record<'active' | 'passive', RecordedSession>;

/** Replays the recorded exchanges with the same semantics as the
 * server: next-step is idempotent, complete must name the pending step. */
class ReplayApi implements SessionApi {
  private cursor = 0;
  completions: string[] = [];

  constructor(private exchanges: NextStep[]) {}

  async nextStep(): Promise<NextStep> {
    return this.exchanges[this.cursor];
  }

  async completeStep(_sessionId: string, stepId: string): Promise<SessionView> {
    const pending = this.exchanges[this.cursor];
    if (pending.done || stepId !== pending.step_id) {
      throw new ApiError(409, `step ${stepId} is not the pending step`);
    }
    this.completions.push(stepId);
    this.cursor += 1;
    return {} as SessionView;
  }
}

describe('topic player headless equivalence', () => {
  for (const method of ['passive', 'active'] as const) {
    it(`${method} session reproduces the headless driver trace`, async () => {
      const recorded = sessions[method];
      const api = new ReplayApi(recorded.exchanges);
      const trace = await driveToCompletion(api, 'sess-x');
      expect(trace).toEqual(recorded.trace);
      expect(api.completions).toEqual(recorded.trace.map((p) => p.split('/')[1]));
    });
  }

  it('worked-example topic is 2 steps passive and 4 steps active', () => {
    const count = (m: 'passive' | 'active') =>
      sessions[m].trace.filter((p) => p.startsWith('us-writing/')).length;
    expect(count('passive')).toBe(2);
    expect(count('active')).toBe(4);
  });

  it('passive reflection and active group work render as their directive kinds', () => {
    const kinds = (m: 'passive' | 'active') =>
      sessions[m].exchanges
        .filter((e) => !e.done && e.topic_id === 'us-writing')
        .map((e) => e.kind);
    expect(kinds('passive')).toEqual(['show_content', 'request_reflection']);
    expect(kinds('active')).toEqual([
      'show_content',
      'request_group_work',
      'show_content',
      'request_group_work',
    ]);
  });
});

describe('blocked-advance state', () => {
  it('a 409 leaves the player blocked until refresh', async () => {
    const recorded = sessions.passive;
    expect(recorded.rejection.status).toBe(409);

    class RejectOnce extends ReplayApi {
      private rejected = false;
      override async completeStep(sessionId: string, stepId: string): Promise<SessionView> {
        if (!this.rejected) {
          this.rejected = true;
          throw new ApiError(409, recorded.rejection.body.detail);
        }
        return super.completeStep(sessionId, stepId);
      }
    }

    const api = new RejectOnce(recorded.exchanges);
    const player = new PlayerCore(api, 'sess-x');
    await player.refresh();
    let view = await player.advance('text');
    expect(view.status).toBe('blocked');
    expect(view.error).toContain('not the pending step');
    // refresh clears the block and advancing then succeeds
    view = await player.refresh();
    expect(view.status).toBe('showing');
    view = await player.advance('text');
    expect(view.status).toBe('showing');
    expect(view.trace).toEqual(recorded.trace.slice(0, 2));
  });

  it('advance without a visible step is a programming error', async () => {
    const api = new ReplayApi([{ done: true } as NextStep]);
    const player = new PlayerCore(api, 'sess-x');
    await player.refresh();
    await expect(player.advance()).rejects.toThrow('nothing to advance');
  });
});
