/**
 * Scorer sidecar entry point.
 *
 *   node dist/main.js [--bertscore-model charhash] [--comet-model charhash]
 *                     [--device cpu] [--batch-size 32]
 *
 * Model load failures are reported on stderr and exit nonzero before any
 * handshake succeeds.
 */

import { resolveProvider } from './embedding.js';
import { serve, ServerConfig } from './server.js';

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith('--')) {
      throw new Error(`unexpected argument ${arg}`);
    }
    const value = argv[i + 1];
    if (value === undefined || value.startsWith('--')) {
      throw new Error(`flag ${arg} needs a value`);
    }
    args.set(arg.slice(2), value);
    i++;
  }
  return args;
}

async function main(): Promise<number> {
  let config: ServerConfig;
  try {
    const args = parseArgs(process.argv.slice(2));
    const batchSize = Number(args.get('batch-size') ?? '32');
    if (!Number.isInteger(batchSize) || batchSize < 1) {
      throw new Error('--batch-size must be a positive integer');
    }
    config = {
      bertscoreProvider: resolveProvider(args.get('bertscore-model') ?? 'charhash'),
      cometProvider: resolveProvider(args.get('comet-model') ?? 'charhash'),
      batchSize,
      device: args.get('device') ?? 'cpu',
    };
  } catch (err) {
    process.stderr.write(`sidecar: ${(err as Error).message}\n`);
    return 1;
  }
  return serve(config, process.stdin, process.stdout);
}

main().then(
  (code) => process.exit(code),
  (err) => {
    process.stderr.write(`sidecar: fatal: ${err}\n`);
    process.exit(1);
  },
);
