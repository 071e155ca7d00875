// Wire types for the /api/v1 JSON endpoints.

export type EntityTag = 'PER' | 'CITY' | 'ADDR' | 'STATUS'
export type HelpLabelValue = 'call_for_help' | 'not_call_for_help'
export type StageValue =
  | 'classified_negative'
  | 'tag_failed'
  | 'unlocated'
  | 'located'
  | 'filtered_out_of_scope'

export interface SpanDto {
  tag: EntityTag
  start: number
  end: number
  surface: string
}

export interface PointDto {
  lat: number
  lon: number
}

export interface OutcomeDto {
  kind: 'located' | 'not_found' | 'out_of_scope' | 'provider_error'
  point: PointDto | null
  message: string | null
}

export interface ResultItem {
  tweet_id: string
  label: HelpLabelValue
  margin: number
  spans: SpanDto[]
  matched_city: string | null
  normalized_address: string | null
  outcome: OutcomeDto | null
  stage: StageValue
  text: string
  created_at: string
}

export interface ResultPage {
  total: number
  items: ResultItem[]
}

export interface FiltersPayload {
  names: string[]
  statuses: string[]
}

export interface StatsPayload {
  ingested: number
  classified_negative: number
  tagged: number
  tag_failed: number
  geocode_attempted: number
  located: number
  unlocated: number
  filtered: number
}

export interface IngestSummary {
  accepted: number
  duplicates: number
  rejected: number
  stats: StatsPayload
}

export interface TweetDto {
  id: string
  text: string
  created_at: string
  author?: string
}

export interface AnnotationDto {
  tweet_id: string
  label: HelpLabelValue
  spans: SpanDto[]
  annotator: string
  created_at?: string
}

export interface TweetDetail {
  tweet: TweetDto
  result: ResultItem | null
  annotations: AnnotationDto[]
}

export interface BboxDto {
  min_lat: number
  max_lat: number
  min_lon: number
  max_lon: number
}

export interface UiConfig {
  tile_url: string
  poll_interval_s: number
  bbox: BboxDto
}
