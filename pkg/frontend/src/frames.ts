/**
 * Frame loading for the exporter: numbered PNG files, sorted by name the
 * same way the downstream toolkit sorts them.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';
import { PNG } from 'pngjs';

export interface Frame {
  width: number;
  height: number;
  /** interleaved RGB, 3 bytes per pixel */
  rgb: Uint8Array;
}

export function listFrameFiles(dir: string): string[] {
  const entries = fs
    .readdirSync(dir)
    .filter((name) => name.toLowerCase().endsWith('.png'))
    .sort();
  if (entries.length === 0) {
    throw new Error(`no PNG frames found in ${dir}`);
  }
  return entries.map((name) => path.join(dir, name));
}

export function loadPng(file: string): Frame {
  const png = PNG.sync.read(fs.readFileSync(file));
  const pixels = png.width * png.height;
  const rgb = new Uint8Array(pixels * 3);
  for (let i = 0; i < pixels; i++) {
    rgb[i * 3] = png.data[i * 4];
    rgb[i * 3 + 1] = png.data[i * 4 + 1];
    rgb[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width: png.width, height: png.height, rgb };
}
