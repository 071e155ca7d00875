// Typed client for the triage REST API. The fetch implementation is
// injectable so tests can run without a browser or a server.

import type {
  AnnotationDto,
  FiltersPayload,
  IngestSummary,
  ResultPage,
  StatsPayload,
  TweetDetail,
  TweetDto,
  UiConfig,
} from './types.js'

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>

export interface ResultQuery {
  name?: string
  status?: string
  stage?: string
  limit?: number
  offset?: number
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message)
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText
    try {
      const body = (await response.json()) as { error?: string }
      if (body && body.error) detail = body.error
    } catch {
      // keep the status text
    }
    throw new ApiError(response.status, detail)
  }
  return (await response.json()) as T
}

export class ApiClient {
  constructor(
    private readonly base: string = '',
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private get(url: string, signal?: AbortSignal): Promise<Response> {
    return this.fetchFn(this.base + url, { signal })
  }

  private post(url: string, payload: unknown): Promise<Response> {
    return this.fetchFn(this.base + url, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(payload),
    })
  }

  async config(): Promise<UiConfig> {
    return parseOrThrow(await this.get('/config.json'))
  }

  async results(query: ResultQuery = {}, signal?: AbortSignal): Promise<ResultPage> {
    const params = new URLSearchParams()
    if (query.name) params.set('name', query.name)
    if (query.status) params.set('status', query.status)
    if (query.stage) params.set('stage', query.stage)
    if (query.limit !== undefined) params.set('limit', String(query.limit))
    if (query.offset !== undefined) params.set('offset', String(query.offset))
    const suffix = params.toString() ? `?${params.toString()}` : ''
    return parseOrThrow(await this.get(`/api/v1/results${suffix}`, signal))
  }

  async filters(): Promise<FiltersPayload> {
    return parseOrThrow(await this.get('/api/v1/filters'))
  }

  async stats(): Promise<StatsPayload> {
    return parseOrThrow(await this.get('/api/v1/stats'))
  }

  async tweet(id: string): Promise<TweetDetail> {
    return parseOrThrow(await this.get(`/api/v1/tweets/${encodeURIComponent(id)}`))
  }

  async saveAnnotation(record: AnnotationDto): Promise<AnnotationDto> {
    return parseOrThrow(await this.post('/api/v1/annotations', record))
  }

  async ingest(tweets: TweetDto[]): Promise<IngestSummary> {
    return parseOrThrow(await this.post('/api/v1/tweets', tweets))
  }
}
