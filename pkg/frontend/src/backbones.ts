/**
 * Backbone registry. A backbone maps one RGB frame to a fixed-dimension
 * embedding, deterministically. The identifier is a config string, so
 * callers can swap encoders without touching the exporter; the built-ins
 * below are dependency-free deterministic featurizers.
 *
 *   patch-mean-<g>  average-pool to a g x g grid per channel (dim 3*g*g)
 *   luma-hist-<b>   normalized b-bin histogram of Rec.601 luma (dim b)
 */

import type { Frame } from './frames.js';

export interface Backbone {
  id: string;
  dim: number;
  preprocessing: string;
  embed(frame: Frame): Float64Array;
}

class PatchMeanBackbone implements Backbone {
  readonly id: string;
  readonly dim: number;
  readonly preprocessing: string;

  constructor(private readonly grid: number) {
    this.id = `patch-mean-${grid}`;
    this.dim = 3 * grid * grid;
    this.preprocessing =
      `average-pool RGB to ${grid}x${grid} per channel, intensities scaled to [0, 1]`;
  }

  embed(frame: Frame): Float64Array {
    const g = this.grid;
    const out = new Float64Array(this.dim);
    const counts = new Float64Array(this.dim);
    for (let y = 0; y < frame.height; y++) {
      const gy = Math.min(Math.floor((y * g) / frame.height), g - 1);
      for (let x = 0; x < frame.width; x++) {
        const gx = Math.min(Math.floor((x * g) / frame.width), g - 1);
        const cell = gy * g + gx;
        const p = (y * frame.width + x) * 3;
        for (let c = 0; c < 3; c++) {
          out[c * g * g + cell] += frame.rgb[p + c];
          counts[c * g * g + cell] += 1;
        }
      }
    }
    for (let i = 0; i < out.length; i++) {
      out[i] = counts[i] > 0 ? out[i] / counts[i] / 255 : 0;
    }
    return out;
  }
}

class LumaHistBackbone implements Backbone {
  readonly id: string;
  readonly dim: number;
  readonly preprocessing: string;

  constructor(bins: number) {
    this.id = `luma-hist-${bins}`;
    this.dim = bins;
    this.preprocessing =
      `${bins}-bin normalized histogram of Rec.601 luma (0.299/0.587/0.114)`;
  }

  embed(frame: Frame): Float64Array {
    const out = new Float64Array(this.dim);
    const pixels = frame.width * frame.height;
    for (let i = 0; i < pixels; i++) {
      const p = i * 3;
      const luma =
        0.299 * frame.rgb[p] + 0.587 * frame.rgb[p + 1] + 0.114 * frame.rgb[p + 2];
      const bin = Math.min(Math.floor((luma / 256) * this.dim), this.dim - 1);
      out[bin] += 1;
    }
    for (let i = 0; i < this.dim; i++) out[i] /= pixels;
    return out;
  }
}

export function createBackbone(id: string): Backbone {
  const patch = id.match(/^patch-mean-(\d+)$/);
  if (patch) {
    const g = parseInt(patch[1], 10);
    if (g < 1 || g > 64) throw new Error(`patch-mean grid out of range: ${g}`);
    return new PatchMeanBackbone(g);
  }
  const hist = id.match(/^luma-hist-(\d+)$/);
  if (hist) {
    const bins = parseInt(hist[1], 10);
    if (bins < 2 || bins > 256) throw new Error(`luma-hist bins out of range: ${bins}`);
    return new LumaHistBackbone(bins);
  }
  throw new Error(
    `unknown backbone ${JSON.stringify(id)}; ` +
      'built-ins: patch-mean-<grid>, luma-hist-<bins>',
  );
}
