/**
 * Array-level bindings over the `jcskit` command line tool.
 *
 * Every call shells out to the CLI with temporary JSON files, so results are
 * identical to what the pipeline produces on disk; no math is reimplemented
 * here. Caller arrays are never mutated.
 *
 * The Python entry point is resolved from JCSKIT_PYTHON (default `python3`)
 * and invoked as `python -m jcskit ...`; set JCSKIT_CLI to use an installed
 * `jcskit` executable instead.
 */

import { spawnSync } from 'node:child_process';
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

export type Vec3 = [number, number, number];
export type ChannelKey = [owner: string, channel: string];

/** N x J x 3 keypoints: nested arrays or a flat typed array plus its shape. */
export type FramesInput =
  | number[][][]
  | { data: Float64Array; frames: number; joints: number };

export interface ConvertOptions {
  fps?: number;
  confidence?: number[][];
  minConfidence?: number;
  resample?: number;
}

export interface AngleResult {
  format: string;
  fps: number;
  layout: ChannelKey[];
  /** frames x channels, null = unavailable */
  values: (number | null)[][];
  root: {
    position: (Vec3 | null)[];
    orientation: (number[][] | null)[];
  };
  boneLengths: Record<string, number>;
}

export interface ReconstructResult {
  format: string;
  fps: number;
  /** frames x joints, null = joint not reconstructable */
  frames: (Vec3 | null)[][];
}

export interface BaselineResult {
  format: string;
  fps: number;
  layout: [string, string][];
  values: (number | null)[][];
}

export class CliError extends Error {
  constructor(
    message: string,
    public readonly exitCode: number,
    public readonly stderr: string,
  ) {
    super(message);
    this.name = 'CliError';
  }
}

function cliCommand(): { command: string; prefix: string[] } {
  const direct = process.env.JCSKIT_CLI;
  if (direct) return { command: direct, prefix: [] };
  const python = process.env.JCSKIT_PYTHON ?? 'python3';
  return { command: python, prefix: ['-m', 'jcskit'] };
}

export function runCli(args: string[], input?: string): string {
  const { command, prefix } = cliCommand();
  const res = spawnSync(command, [...prefix, ...args], {
    encoding: 'utf-8',
    input,
    maxBuffer: 256 * 1024 * 1024,
  });
  if (res.error) throw res.error;
  if (res.status !== 0) {
    const firstLine = (res.stderr ?? '').trim().split('\n')[0] ?? '';
    throw new CliError(
      `jcskit ${args[0]} failed (exit ${res.status}): ${firstLine}`,
      res.status ?? -1,
      res.stderr ?? '',
    );
  }
  return res.stdout;
}

function toNestedFrames(frames: FramesInput): number[][][] {
  if (Array.isArray(frames)) return frames;
  const { data, frames: n, joints } = frames;
  if (data.length !== n * joints * 3) {
    throw new Error(
      `typed array has ${data.length} values, expected ${n}*${joints}*3`,
    );
  }
  const out: number[][][] = [];
  for (let f = 0; f < n; f++) {
    const frame: number[][] = [];
    for (let j = 0; j < joints; j++) {
      const base = (f * joints + j) * 3;
      frame.push([data[base], data[base + 1], data[base + 2]]);
    }
    out.push(frame);
  }
  return out;
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), 'jcskit-'));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function writeKeypointFile(
  dir: string,
  frames: FramesInput,
  format: string,
  opts: ConvertOptions,
): string {
  const doc: Record<string, unknown> = {
    format,
    fps: opts.fps ?? 30,
    frames: toNestedFrames(frames),
  };
  if (opts.confidence) doc.confidence = opts.confidence;
  const path = join(dir, 'input.json');
  writeFileSync(path, JSON.stringify(doc));
  return path;
}

function confidenceArgs(opts: ConvertOptions): string[] {
  return opts.minConfidence !== undefined
    ? ['--min-confidence', String(opts.minConfidence)]
    : [];
}

/** Keypoint array -> angle channels (layout, per-frame values, root, lengths). */
export function convertArray(
  frames: FramesInput,
  format: string,
  opts: ConvertOptions = {},
): AngleResult {
  return withTempDir((dir) => {
    const input = writeKeypointFile(dir, frames, format, opts);
    const out = join(dir, 'angles.json');
    const args = ['convert', input, '-o', out, ...confidenceArgs(opts)];
    if (opts.resample !== undefined) args.push('--resample', String(opts.resample));
    runCli(args);
    const doc = JSON.parse(readFileSync(out, 'utf-8'));
    return {
      format: doc.format,
      fps: doc.fps,
      layout: doc.layout as ChannelKey[],
      values: doc.frames,
      root: doc.root,
      boneLengths: doc.bone_lengths,
    };
  });
}

/** Angle channels (as returned by convertArray) -> keypoint array. */
export function reconstructArray(angles: AngleResult): ReconstructResult {
  return withTempDir((dir) => {
    const input = join(dir, 'angles.json');
    writeFileSync(
      input,
      JSON.stringify({
        format: angles.format,
        fps: angles.fps,
        units: 'radians',
        layout: angles.layout,
        frames: angles.values,
        root: angles.root,
        bone_lengths: angles.boneLengths,
      }),
    );
    const out = join(dir, 'keypoints.json');
    runCli(['reconstruct', input, '-o', out]);
    const doc = JSON.parse(readFileSync(out, 'utf-8'));
    return { format: doc.format, fps: doc.fps, frames: doc.frames };
  });
}

/** Plain dot-product bone-pair angles for every adjacent bone pair. */
export function baselineArray(
  frames: FramesInput,
  format: string,
  opts: ConvertOptions = {},
): BaselineResult {
  return withTempDir((dir) => {
    const input = writeKeypointFile(dir, frames, format, opts);
    const out = join(dir, 'baseline.json');
    runCli(['convert', input, '--baseline', '-o', out, ...confidenceArgs(opts)]);
    const doc = JSON.parse(readFileSync(out, 'utf-8'));
    return {
      format: doc.format,
      fps: doc.fps,
      layout: doc.layout,
      values: doc.frames,
    };
  });
}

/** Registered keypoint-set ids. */
export function formats(): string[] {
  return JSON.parse(runCli(['formats'])).formats;
}
