/** Thin typed client over the job service HTTP API. */

import type { JobSummary, PresetMap } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class StudioApi {
  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(this.url(path), init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  async getPresets(): Promise<PresetMap> {
    return (await this.request("/presets")).json();
  }

  async submitJob(
    content: Blob,
    style: Blob,
    config: Record<string, unknown>,
  ): Promise<{ id: string }> {
    const form = new FormData();
    form.append("content", content, "content.png");
    form.append("style", style, "style.png");
    form.append("config", JSON.stringify(config));
    return (await this.request("/jobs", { method: "POST", body: form })).json();
  }

  async getJob(id: string): Promise<JobSummary> {
    return (await this.request(`/jobs/${id}`)).json();
  }

  async listJobs(): Promise<{ jobs: JobSummary[] }> {
    return (await this.request("/jobs")).json();
  }

  async getLossCsv(id: string): Promise<string> {
    return (await this.request(`/jobs/${id}/losses`)).text();
  }

  async cancelJob(id: string): Promise<{ id: string; status: string }> {
    return (await this.request(`/jobs/${id}/cancel`, { method: "POST" })).json();
  }

  frameUrl(id: string, index: number): string {
    return this.url(`/jobs/${id}/frames/${index}`);
  }
}
