/**
 * Export job: run a backbone over every frame of a directory and write
 * the rows as a .mpfs score file (plus a JSON manifest describing how
 * the scores were produced).
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { createBackbone } from './backbones.js';
import { listFrameFiles, loadPng } from './frames.js';
import {
  KIND_EMBEDDINGS,
  KIND_LOGITS,
  ScoreMatrix,
  encodeScores,
} from './scorefile.js';

export interface LinearHead {
  weights: number[];
  bias: number;
}

export interface ExportJob {
  framesDir: string;
  backbone: string;
  kind: 'embeddings' | 'logits';
  out: string;
  headPath?: string;
  batchSize?: number;
}

export function loadHead(file: string): LinearHead {
  const data = JSON.parse(fs.readFileSync(file, 'utf-8'));
  if (!Array.isArray(data.weights)) {
    throw new Error(`head file ${file} has no weights array`);
  }
  return { weights: data.weights.map(Number), bias: Number(data.bias ?? 0) };
}

export function applyHead(embedding: Float64Array, head: LinearHead): number {
  if (embedding.length !== head.weights.length) {
    throw new Error(
      `head dim ${head.weights.length} does not match embedding dim ${embedding.length}`,
    );
  }
  let acc = head.bias;
  for (let i = 0; i < embedding.length; i++) {
    acc += embedding[i] * head.weights[i];
  }
  return acc;
}

export interface ExportResult {
  out: string;
  manifest: string;
  numFrames: number;
  dim: number;
}

export function exportScores(job: ExportJob): ExportResult {
  const backbone = createBackbone(job.backbone);
  const files = listFrameFiles(job.framesDir);
  const head =
    job.kind === 'logits'
      ? loadHead(
          job.headPath ??
            (() => {
              throw new Error('kind=logits requires a head file');
            })(),
        )
      : undefined;

  const dim = job.kind === 'logits' ? 1 : backbone.dim;
  const values = new Float32Array(files.length * dim);
  const batch = Math.max(1, job.batchSize ?? 16);
  for (let start = 0; start < files.length; start += batch) {
    const slice = files.slice(start, start + batch);
    const embeddings = slice.map((f) => backbone.embed(loadPng(f)));
    embeddings.forEach((emb, j) => {
      const row = start + j;
      // round to storage precision first, so a logits export equals the
      // head applied to what an embeddings export of the same frames holds
      const stored = Float32Array.from(emb);
      if (head) {
        values[row] = applyHead(Float64Array.from(stored), head);
      } else {
        if (emb.length !== dim) {
          throw new Error(`backbone emitted dim ${emb.length}, expected ${dim}`);
        }
        values.set(stored, row * dim);
      }
    });
  }

  const matrix: ScoreMatrix = {
    numFrames: files.length,
    dim,
    kind: job.kind === 'logits' ? KIND_LOGITS : KIND_EMBEDDINGS,
    values,
  };
  fs.writeFileSync(job.out, encodeScores(matrix));

  const manifestPath = `${job.out}.manifest.json`;
  const manifest = {
    backbone: backbone.id,
    dim,
    frames: files.map((f) => path.basename(f)),
    kind: job.kind,
    num_frames: files.length,
    preprocessing: backbone.preprocessing,
    source: job.framesDir,
  };
  fs.writeFileSync(manifestPath, `${JSON.stringify(manifest, null, 2)}\n`);
  return { out: job.out, manifest: manifestPath, numFrames: files.length, dim };
}
