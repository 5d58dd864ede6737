/**
 * Request loop: JSONL over stdin/stdout, answering strictly in order.
 * EOF on stdin means the host is done; exit cleanly.
 */

import { createInterface } from 'node:readline';
import type { Readable, Writable } from 'node:stream';
import { EmbeddingProvider } from './embedding.js';
import {
  Handshake,
  PROTOCOL_VERSION,
  ScoreEntry,
  ScoreResponse,
  isHostHello,
  isScoreRequest,
} from './protocol.js';
import { bertScore, cometScore } from './scores.js';

export interface ServerConfig {
  bertscoreProvider: EmbeddingProvider;
  cometProvider: EmbeddingProvider;
  batchSize: number;
  device: string;
}

function scoreOne(config: ServerConfig, metric: string, pair: {
  cand: string; ref: string; src?: string;
}): ScoreEntry {
  if (metric === 'bertscore') {
    const { p, r, f1 } = bertScore(config.bertscoreProvider, pair.cand, pair.ref);
    return { p, r, f1, value: f1 };
  }
  if (metric === 'comet') {
    if (typeof pair.src !== 'string') {
      return { value: null, error: 'comet pair lacks src' };
    }
    return { value: cometScore(config.cometProvider, pair.src, pair.cand, pair.ref) };
  }
  return { value: null, error: `unsupported metric ${metric}` };
}

export async function serve(
  config: ServerConfig,
  input: Readable,
  output: Writable,
): Promise<number> {
  const rl = createInterface({ input });
  const write = (obj: unknown) => output.write(JSON.stringify(obj) + '\n');
  let greeted = false;

  for await (const line of rl) {
    if (!line.trim()) continue;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch {
      process.stderr.write(`sidecar: ignoring unparseable line\n`);
      continue;
    }

    if (!greeted) {
      if (!isHostHello(obj)) {
        process.stderr.write('sidecar: expected hello handshake first\n');
        return 1;
      }
      if (obj.v !== PROTOCOL_VERSION) {
        process.stderr.write(
          `sidecar: protocol version mismatch (host ${obj.v}, plugin ${PROTOCOL_VERSION})\n`,
        );
        return 1;
      }
      const handshake: Handshake = {
        v: PROTOCOL_VERSION,
        metrics: ['bertscore', 'comet'],
        models: {
          bertscore: config.bertscoreProvider.id,
          comet: `${config.cometProvider.id}/ref-based`,
        },
      };
      write(handshake);
      greeted = true;
      continue;
    }

    if (!isScoreRequest(obj)) {
      process.stderr.write('sidecar: malformed request line\n');
      continue;
    }
    // batchSize caps how many pairs are embedded at once; with the hashed
    // provider it only bounds peak memory
    const scores: ScoreEntry[] = [];
    for (let start = 0; start < obj.pairs.length; start += config.batchSize) {
      for (const pair of obj.pairs.slice(start, start + config.batchSize)) {
        scores.push(scoreOne(config, obj.metric, pair));
      }
    }
    const response: ScoreResponse = { id: obj.id, scores };
    write(response);
  }
  return 0;
}
