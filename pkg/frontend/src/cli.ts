#!/usr/bin/env node
/**
 * export_scores: run a backbone over a frame directory and emit a .mpfs
 * score file consumable by the mpfscope detector.
 */

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { exportScores } from './exporter.js';

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .scriptName('export_scores')
    .option('frames', {
      type: 'string',
      demandOption: true,
      describe: 'directory of numbered PNG frames',
    })
    .option('backbone', {
      type: 'string',
      default: 'patch-mean-4',
      describe: 'backbone identifier (patch-mean-<g>, luma-hist-<b>)',
    })
    .option('kind', {
      choices: ['embeddings', 'logits'] as const,
      default: 'embeddings' as const,
      describe: 'emit raw embeddings or head-projected logits',
    })
    .option('head', {
      type: 'string',
      describe: 'linear head JSON ({weights, bias}); required for logits',
    })
    .option('out', {
      type: 'string',
      demandOption: true,
      describe: 'output .mpfs path',
    })
    .option('batch-size', {
      type: 'number',
      default: 16,
      describe: 'frames decoded per batch',
    })
    .strict()
    .parse();

  const result = exportScores({
    framesDir: argv.frames,
    backbone: argv.backbone,
    kind: argv.kind,
    headPath: argv.head,
    out: argv.out,
    batchSize: argv['batch-size'],
  });
  console.log(JSON.stringify(result));
}

main().catch((err) => {
  console.error(`error: ${err instanceof Error ? err.message : err}`);
  process.exit(1);
});
