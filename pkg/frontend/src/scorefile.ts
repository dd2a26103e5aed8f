/**
 * Binary score-file (.mpfs) encoding.
 *
 * Layout (little-endian): magic "MPFS" | u16 version=1 | u32 numFrames |
 * u32 dim | u8 kind, followed by numFrames*dim float32 values row-major,
 * one row per frame in temporal order.
 */

export const SCORE_MAGIC = 'MPFS';
export const SCORE_VERSION = 1;
export const HEADER_SIZE = 15;

export const KIND_LOGITS = 0;
export const KIND_EMBEDDINGS = 1;

export interface ScoreMatrix {
  numFrames: number;
  dim: number;
  kind: number;
  values: Float32Array; // row-major, numFrames * dim
}

export function encodeScores(matrix: ScoreMatrix): Buffer {
  const { numFrames, dim, kind, values } = matrix;
  if (values.length !== numFrames * dim) {
    throw new Error(
      `score payload length ${values.length} != ${numFrames} x ${dim}`,
    );
  }
  if (kind !== KIND_LOGITS && kind !== KIND_EMBEDDINGS) {
    throw new Error(`kind must be 0 (logits) or 1 (embeddings), got ${kind}`);
  }
  for (const v of values) {
    if (!Number.isFinite(v)) throw new Error('scores must be finite');
  }
  const buf = Buffer.alloc(HEADER_SIZE + values.length * 4);
  buf.write(SCORE_MAGIC, 0, 'ascii');
  buf.writeUInt16LE(SCORE_VERSION, 4);
  buf.writeUInt32LE(numFrames, 6);
  buf.writeUInt32LE(dim, 10);
  buf.writeUInt8(kind, 14);
  for (let i = 0; i < values.length; i++) {
    buf.writeFloatLE(values[i], HEADER_SIZE + i * 4);
  }
  return buf;
}

export function decodeScores(buf: Buffer): ScoreMatrix {
  if (buf.length < HEADER_SIZE) {
    throw new Error(`truncated header (${buf.length} bytes)`);
  }
  const magic = buf.toString('ascii', 0, 4);
  if (magic !== SCORE_MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(magic)}`);
  }
  const version = buf.readUInt16LE(4);
  if (version !== SCORE_VERSION) {
    throw new Error(`unsupported version ${version}`);
  }
  const numFrames = buf.readUInt32LE(6);
  const dim = buf.readUInt32LE(10);
  const kind = buf.readUInt8(14);
  const expected = HEADER_SIZE + numFrames * dim * 4;
  if (buf.length !== expected) {
    throw new Error(
      `payload size mismatch, expected ${expected} bytes, got ${buf.length}`,
    );
  }
  const values = new Float32Array(numFrames * dim);
  for (let i = 0; i < values.length; i++) {
    values[i] = buf.readFloatLE(HEADER_SIZE + i * 4);
  }
  return { numFrames, dim, kind, values };
}
