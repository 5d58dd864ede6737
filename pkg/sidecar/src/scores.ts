/**
 * BERTScore-style and COMET-style scoring over token embeddings.
 *
 * BERTScore: greedy cosine matching between candidate and reference tokens;
 * precision averages each candidate token's best match, recall each
 * reference token's, F1 combines them. Identical inputs score exactly 1.
 *
 * The COMET-style estimate blends candidate/reference and candidate/source
 * sentence similarities and maps the result onto [-1, 1]; like the real
 * model's output it is not clamped downstream and can go negative.
 */

import { EmbeddingProvider, cosine, tokenize, EMBEDDING_DIM } from './embedding.js';

export interface BertScoreResult {
  p: number;
  r: number;
  f1: number;
}

export function bertScore(
  provider: EmbeddingProvider,
  candidate: string,
  reference: string,
): BertScoreResult {
  const candTokens = tokenize(candidate);
  const refTokens = tokenize(reference);
  if (candTokens.length === 0 && refTokens.length === 0) {
    const one = candidate === reference ? 1 : 0;
    return { p: one, r: one, f1: one };
  }
  if (candTokens.length === 0 || refTokens.length === 0) {
    return { p: 0, r: 0, f1: 0 };
  }
  const candVecs = provider.embedTokens(candTokens);
  const refVecs = provider.embedTokens(refTokens);

  let precision = 0;
  for (const c of candVecs) {
    let best = -Infinity;
    for (const r of refVecs) best = Math.max(best, cosine(c, r));
    precision += best;
  }
  precision /= candVecs.length;

  let recall = 0;
  for (const r of refVecs) {
    let best = -Infinity;
    for (const c of candVecs) best = Math.max(best, cosine(r, c));
    recall += best;
  }
  recall /= refVecs.length;

  const f1 = precision + recall > 0 ? (2 * precision * recall) / (precision + recall) : 0;
  return { p: precision, r: recall, f1 };
}

function sentenceVector(provider: EmbeddingProvider, text: string): Float64Array {
  const tokens = tokenize(text);
  const out = new Float64Array(EMBEDDING_DIM);
  if (tokens.length === 0) return out;
  for (const vec of provider.embedTokens(tokens)) {
    for (let i = 0; i < EMBEDDING_DIM; i++) out[i] += vec[i];
  }
  let norm = 0;
  for (let i = 0; i < EMBEDDING_DIM; i++) norm += out[i] * out[i];
  norm = Math.sqrt(norm);
  if (norm > 0) {
    for (let i = 0; i < EMBEDDING_DIM; i++) out[i] /= norm;
  }
  return out;
}

const REF_WEIGHT = 0.75;
const SRC_WEIGHT = 0.25;

export function cometScore(
  provider: EmbeddingProvider,
  source: string,
  candidate: string,
  reference: string,
): number {
  const cand = sentenceVector(provider, candidate);
  const ref = sentenceVector(provider, reference);
  const src = sentenceVector(provider, source);
  const blend = REF_WEIGHT * cosine(cand, ref) + SRC_WEIGHT * cosine(cand, src);
  return 2 * blend - 1;
}
