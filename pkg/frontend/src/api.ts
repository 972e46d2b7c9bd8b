// Typed client for the /v1 API. The console renders only what these
// calls return; all adaptation and statistics stay server-side.

export interface Profile {
  learner_id: string;
  dims: { perception: number; understanding: number; processing: number; input: number };
  processing_style: 'active' | 'reflective';
  scored_at: string;
}

export interface SheetView {
  learner_id: string;
  answers: Record<string, 'a' | 'b'>;
}

export interface NextStep {
  done: boolean;
  phase?: string;
  kind?: 'show_content' | 'request_reflection' | 'request_group_work' | 'request_individual_work';
  topic_id?: string;
  step_id?: string;
  payload?: string;
  submission_required?: boolean;
}

export interface SessionView {
  session_id: string;
  learner_id: string;
  method: 'active' | 'passive';
  completed_steps: string[];
  phase: string;
}

export interface ProgressView {
  topics_completed: number;
  steps_completed: number;
  percent: number;
}

export interface BurndownPoint {
  day: string;
  remaining_hours: number;
}

export interface BurndownSeries {
  sprint_id: string;
  points: BurndownPoint[];
}

export interface SprintMetrics {
  work_capacity_hours: number;
  velocity_points: number;
  estimation_accuracy: number | null;
}

export interface GroupStats {
  M: number;
  ME: number;
  SD: number | null;
  n: number;
}

export interface AnalysisReport {
  groups: Record<string, GroupStats>;
  normality: Record<string, { W: number; p: number }>;
  variance_test: { F: number; p: number };
  mean_test: { t: number; df: number; p: number; variant: 'pooled' | 'welch' };
  alpha: number;
  verdict: string;
  excluded: string[];
  gains: Record<string, number[]>;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class Api {
  constructor(
    private principalId: string,
    private fetcher: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown, raw?: string): Promise<T> {
    const headers: Record<string, string> = { 'X-Principal-Id': this.principalId };
    let payload: string | undefined;
    if (raw !== undefined) {
      headers['Content-Type'] = 'text/csv';
      payload = raw;
    } else if (body !== undefined) {
      headers['Content-Type'] = 'application/json';
      payload = JSON.stringify(body);
    }
    const res = await this.fetcher(path, { method, headers, body: payload });
    const text = await res.text();
    const parsed = text ? JSON.parse(text) : null;
    if (!res.ok) {
      const detail =
        parsed && typeof parsed === 'object' && 'detail' in parsed
          ? String((parsed as { detail: unknown }).detail)
          : text;
      throw new ApiError(res.status, detail);
    }
    return parsed as T;
  }

  health() {
    return this.request<{ status: string; pack: string }>('GET', '/v1/health');
  }

  whoami(id: string) {
    return this.request<{ id: string; role: 'developer' | 'coach' }>('GET', `/v1/principals/${id}`);
  }

  submitSheet(answers: Record<number, 'a' | 'b'>) {
    return this.request<{ scored: boolean; profile?: Profile; answered?: number }>(
      'POST',
      '/v1/ils-responses',
      { answers },
    );
  }

  sheet(learnerId: string) {
    return this.request<SheetView>('GET', `/v1/learners/${learnerId}/sheet`);
  }

  profile(learnerId: string) {
    return this.request<Profile>('GET', `/v1/learners/${learnerId}/profile`);
  }

  createSession(learnerId: string) {
    return this.request<SessionView>('POST', '/v1/sessions', { learner_id: learnerId });
  }

  nextStep(sessionId: string) {
    return this.request<NextStep>('GET', `/v1/sessions/${sessionId}/next-step`);
  }

  completeStep(sessionId: string, stepId: string, submission?: string, participants?: string[]) {
    return this.request<SessionView>(
      'POST',
      `/v1/sessions/${sessionId}/steps/${stepId}/complete`,
      { submission, participants },
    );
  }

  progress(sessionId: string) {
    return this.request<ProgressView>('GET', `/v1/sessions/${sessionId}/progress`);
  }

  board(teamId: string) {
    return this.request<Record<string, unknown>>('GET', `/v1/teams/${teamId}/board`);
  }

  burndown(teamId: string, sprintId: string) {
    return this.request<BurndownSeries>(
      'GET',
      `/v1/teams/${teamId}/sprints/${sprintId}/burndown.json`,
    );
  }

  sprintMetrics(teamId: string, sprintId: string) {
    return this.request<SprintMetrics>('GET', `/v1/teams/${teamId}/sprints/${sprintId}/metrics`);
  }

  logProgress(
    teamId: string,
    taskId: string,
    body: { learner_id: string; hours_spent: number; remaining_hours: number; on: string },
  ) {
    return this.request<Record<string, unknown>>(
      'POST',
      `/v1/teams/${teamId}/tasks/${taskId}/progress`,
      body,
    );
  }

  analyzeExperiment(csvText: string) {
    return this.request<AnalysisReport>('POST', '/v1/experiment/analyze', undefined, csvText);
  }
}
