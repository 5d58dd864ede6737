/**
 * Deterministic token embeddings from feature-hashed character n-grams.
 *
 * This is the offline embedding provider: no model download, no GPU, fully
 * reproducible. Identical tokens map to identical unit vectors, so
 * similarity-based scores hit exactly 1.0 on identical inputs. A
 * transformer-backed provider can be slotted in behind the same interface.
 */

export const EMBEDDING_DIM = 256;
const CHAR_NGRAM_MAX = 3;

export interface EmbeddingProvider {
  id: string;
  embedTokens(tokens: string[]): Float64Array[];
}

/** FNV-1a 32-bit hash; stable across platforms. */
function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

function embedToken(token: string): Float64Array {
  const vec = new Float64Array(EMBEDDING_DIM);
  const padded = `^${token}$`;
  for (let n = 1; n <= CHAR_NGRAM_MAX; n++) {
    for (let i = 0; i + n <= padded.length; i++) {
      const gram = padded.slice(i, i + n);
      const h = fnv1a(`${n}:${gram}`);
      const index = h % EMBEDDING_DIM;
      // second hash bit decides the sign, like standard feature hashing
      const sign = (h & 0x80000000) !== 0 ? -1 : 1;
      vec[index] += sign / n;
    }
  }
  let norm = 0;
  for (let i = 0; i < EMBEDDING_DIM; i++) norm += vec[i] * vec[i];
  norm = Math.sqrt(norm);
  if (norm > 0) {
    for (let i = 0; i < EMBEDDING_DIM; i++) vec[i] /= norm;
  }
  return vec;
}

const tokenCache = new Map<string, Float64Array>();

export const charHashProvider: EmbeddingProvider = {
  id: 'charhash-ngram-v1',
  embedTokens(tokens: string[]): Float64Array[] {
    return tokens.map((token) => {
      let vec = tokenCache.get(token);
      if (!vec) {
        vec = embedToken(token);
        if (tokenCache.size < 100_000) tokenCache.set(token, vec);
      }
      return vec;
    });
  },
};

export function resolveProvider(modelId: string): EmbeddingProvider {
  if (modelId === 'charhash' || modelId === charHashProvider.id) {
    return charHashProvider;
  }
  throw new Error(
    `unknown model ${JSON.stringify(modelId)}; available: charhash`,
  );
}

export function cosine(a: Float64Array, b: Float64Array): number {
  let dot = 0;
  for (let i = 0; i < a.length; i++) dot += a[i] * b[i];
  // inputs are unit vectors; clamp float accumulation noise at the bounds
  return Math.min(1, Math.max(-1, dot));
}

/** Unicode-aware word split with punctuation peeled into its own tokens. */
export function tokenize(text: string): string[] {
  const tokens: string[] = [];
  for (const chunk of text.split(/\s+/u)) {
    if (!chunk) continue;
    for (const piece of chunk.split(/([\p{P}])/u)) {
      if (piece) tokens.push(piece);
    }
  }
  return tokens;
}
