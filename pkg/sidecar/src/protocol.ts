/**
 * Wire types for the scorer plugin protocol (newline-delimited JSON, v1).
 *
 * The host opens with `{"v":1,"hello":true}`; the plugin answers with its
 * supported metrics and the model identifiers it loaded. Requests are
 * answered strictly in order, one in flight at a time.
 */

export const PROTOCOL_VERSION = 1;

export interface HostHello {
  v: number;
  hello: true;
}

export interface Handshake {
  v: number;
  metrics: string[];
  models: Record<string, string>;
}

export interface WirePair {
  cand: string;
  ref: string;
  src?: string;
}

export interface ScoreRequest {
  id: number;
  metric: string;
  pairs: WirePair[];
}

export interface ScoreEntry {
  value: number | null;
  p?: number;
  r?: number;
  f1?: number;
  error?: string;
}

export interface ScoreResponse {
  id: number;
  scores: ScoreEntry[];
}

export function isHostHello(obj: unknown): obj is HostHello {
  return (
    typeof obj === 'object' && obj !== null &&
    (obj as HostHello).hello === true &&
    typeof (obj as HostHello).v === 'number'
  );
}

export function isScoreRequest(obj: unknown): obj is ScoreRequest {
  if (typeof obj !== 'object' || obj === null) return false;
  const req = obj as ScoreRequest;
  return (
    typeof req.id === 'number' &&
    typeof req.metric === 'string' &&
    Array.isArray(req.pairs)
  );
}
