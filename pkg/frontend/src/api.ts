import {
  MultiPackJson,
  NewEntry,
  OntologyJson,
  PackJson,
  SuggestionJson,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${status} ${code}: ${detail}`);
  }
}

async function fail(resp: Response): Promise<never> {
  let code = "error";
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { error?: string; detail?: string };
    code = body.error ?? code;
    detail = body.detail ?? detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(resp.status, code, detail);
}

/** Thin typed client for the annotation service REST API. */
export class ApiClient {
  constructor(readonly base: string) {}

  private url(path: string): string {
    return `${this.base.replace(/\/+$/, "")}${path}`;
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.url(path));
    if (!resp.ok) {
      await fail(resp);
    }
    return (await resp.json()) as T;
  }

  async projects(): Promise<string[]> {
    return (await this.getJson<{ projects: string[] }>("/projects")).projects;
  }

  async ontology(project: string): Promise<OntologyJson> {
    return this.getJson(`/projects/${project}/ontology`);
  }

  async packs(project: string): Promise<string[]> {
    return (await this.getJson<{ packs: string[] }>(`/projects/${project}/packs`)).packs;
  }

  async getPack(project: string, packId: string): Promise<{ pack: PackJson; revision: number }> {
    const resp = await fetch(this.url(`/projects/${project}/packs/${packId}`));
    if (!resp.ok) {
      await fail(resp);
    }
    const revision = Number(resp.headers.get("X-Pack-Revision") ?? "0");
    return { pack: (await resp.json()) as PackJson, revision };
  }

  async createEntry(
    project: string,
    packId: string,
    revision: number,
    entry: NewEntry,
  ): Promise<{ id: number; revision: number }> {
    const resp = await fetch(this.url(`/projects/${project}/packs/${packId}/entries`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ revision, entry }),
    });
    if (!resp.ok) {
      await fail(resp);
    }
    return (await resp.json()) as { id: number; revision: number };
  }

  async patchEntry(
    project: string,
    packId: string,
    entryId: number,
    revision: number,
    attributes: Record<string, unknown> | null,
    span: [number, number] | null,
  ): Promise<{ revision: number }> {
    const body: Record<string, unknown> = { revision };
    if (attributes) {
      body.attributes = attributes;
    }
    if (span) {
      body.span = span;
    }
    const resp = await fetch(
      this.url(`/projects/${project}/packs/${packId}/entries/${entryId}`),
      {
        method: "PATCH",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      },
    );
    if (!resp.ok) {
      await fail(resp);
    }
    return (await resp.json()) as { revision: number };
  }

  async deleteEntry(
    project: string,
    packId: string,
    entryId: number,
    revision: number,
    cascade: boolean,
  ): Promise<{ revision: number }> {
    const resp = await fetch(
      this.url(
        `/projects/${project}/packs/${packId}/entries/${entryId}?revision=${revision}&cascade=${cascade}`,
      ),
      { method: "DELETE" },
    );
    if (!resp.ok) {
      await fail(resp);
    }
    return (await resp.json()) as { revision: number };
  }

  async multipacks(project: string): Promise<string[]> {
    return (await this.getJson<{ multipacks: string[] }>(`/projects/${project}/multipacks`))
      .multipacks;
  }

  async getMultipack(project: string, name: string): Promise<MultiPackJson> {
    return this.getJson(`/projects/${project}/multipacks/${name}`);
  }

  async suggestions(
    project: string,
    name: string,
    params: { type?: string; spanType?: string; threshold?: number } = {},
  ): Promise<SuggestionJson[]> {
    const query = new URLSearchParams();
    if (params.type) {
      query.set("type", params.type);
    }
    if (params.spanType) {
      query.set("span_type", params.spanType);
    }
    if (params.threshold !== undefined) {
      query.set("threshold", String(params.threshold));
    }
    const qs = query.toString();
    return (
      await this.getJson<{ suggestions: SuggestionJson[] }>(
        `/projects/${project}/multipacks/${name}/suggestions${qs ? `?${qs}` : ""}`,
      )
    ).suggestions;
  }

  private async decide(
    project: string,
    name: string,
    sid: string,
    verb: "accept" | "reject",
  ): Promise<{ id: string; status: string; link_id: number | null }> {
    const resp = await fetch(
      this.url(`/projects/${project}/multipacks/${name}/suggestions/${sid}:${verb}`),
      { method: "POST" },
    );
    if (!resp.ok) {
      await fail(resp);
    }
    return (await resp.json()) as { id: string; status: string; link_id: number | null };
  }

  acceptSuggestion(project: string, name: string, sid: string) {
    return this.decide(project, name, sid, "accept");
  }

  rejectSuggestion(project: string, name: string, sid: string) {
    return this.decide(project, name, sid, "reject");
  }
}
