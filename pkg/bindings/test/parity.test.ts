/**
 * Binding-vs-CLI parity: array results must match what the CLI writes to
 * disk for the same logical input, value for value (<= 1e-12, in practice
 * bit-identical because both sides read the same 17-digit serialization).
 */

import { spawnSync } from 'node:child_process';
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, describe, expect, it } from 'vitest';

import {
  baselineArray,
  CliError,
  convertArray,
  formats,
  reconstructArray,
} from '../src/index.js';

/** Deterministic 32-bit PRNG so the fixture is stable across runs. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const N_FRAMES = 100;
const N_JOINTS = 25;

function randomFrames(seed: number): number[][][] {
  const rand = mulberry32(seed);
  const frames: number[][][] = [];
  for (let f = 0; f < N_FRAMES; f++) {
    const frame: number[][] = [];
    for (let j = 0; j < N_JOINTS; j++) {
      frame.push([rand() * 2 - 1, rand() * 2 - 1, rand() * 2 - 1]);
    }
    frames.push(frame);
  }
  return frames;
}

const tempDirs: string[] = [];
afterAll(() => {
  for (const dir of tempDirs) rmSync(dir, { recursive: true, force: true });
});

function cliOnFile(args: string[]): void {
  const python = process.env.JCSKIT_PYTHON ?? 'python3';
  const res = spawnSync(python, ['-m', 'jcskit', ...args], { encoding: 'utf-8' });
  expect(res.status, res.stderr).toBe(0);
}

function writeInputFile(frames: number[][][]): { dir: string; path: string } {
  const dir = mkdtempSync(join(tmpdir(), 'jcskit-parity-'));
  tempDirs.push(dir);
  const path = join(dir, 'input.json');
  writeFileSync(path, JSON.stringify({ format: 'kinect25', fps: 30, frames }));
  return { dir, path };
}

function maxAbsDiff(a: (number | null)[][], b: (number | null)[][]): number {
  expect(a.length).toBe(b.length);
  let worst = 0;
  for (let i = 0; i < a.length; i++) {
    expect(a[i].length).toBe(b[i].length);
    for (let k = 0; k < a[i].length; k++) {
      const x = a[i][k];
      const y = b[i][k];
      expect(x === null).toBe(y === null);
      if (x !== null && y !== null) worst = Math.max(worst, Math.abs(x - y));
    }
  }
  return worst;
}

describe('convertArray', () => {
  it('matches the CLI on a 100-frame random file', () => {
    const frames = randomFrames(1);
    const viaBinding = convertArray(frames, 'kinect25', { fps: 30 });

    const { dir, path } = writeInputFile(frames);
    const out = join(dir, 'angles.json');
    cliOnFile(['convert', path, '-o', out]);
    const viaCli = JSON.parse(readFileSync(out, 'utf-8'));

    expect(viaBinding.layout).toEqual(viaCli.layout);
    expect(maxAbsDiff(viaBinding.values, viaCli.frames)).toBeLessThanOrEqual(1e-12);
    expect(viaBinding.boneLengths).toEqual(viaCli.bone_lengths);
    expect(viaBinding.root).toEqual(viaCli.root);
  });

  it('accepts a flat Float64Array without mutating it', () => {
    const nested = randomFrames(2);
    const flat = new Float64Array(N_FRAMES * N_JOINTS * 3);
    let i = 0;
    for (const frame of nested) for (const joint of frame) for (const c of joint) flat[i++] = c;
    const copy = flat.slice();
    const viaTyped = convertArray(
      { data: flat, frames: N_FRAMES, joints: N_JOINTS },
      'kinect25',
    );
    const viaNested = convertArray(nested, 'kinect25');
    expect(flat).toEqual(copy);
    expect(maxAbsDiff(viaTyped.values, viaNested.values)).toBe(0);
  });

  it('supports resampling to a fixed length', () => {
    const out = convertArray(randomFrames(3).slice(0, 7), 'kinect25', { resample: 200 });
    expect(out.values.length).toBe(200);
  });
});

describe('reconstructArray', () => {
  it('matches the CLI reconstruction of the same angle file', () => {
    const frames = randomFrames(4);
    const angles = convertArray(frames, 'kinect25');
    const viaBinding = reconstructArray(angles);

    const { dir, path } = writeInputFile(frames);
    const anglesPath = join(dir, 'angles.json');
    const backPath = join(dir, 'back.json');
    cliOnFile(['convert', path, '-o', anglesPath]);
    cliOnFile(['reconstruct', anglesPath, '-o', backPath]);
    const viaCli = JSON.parse(readFileSync(backPath, 'utf-8'));

    expect(viaBinding.frames.length).toBe(viaCli.frames.length);
    for (let f = 0; f < viaCli.frames.length; f++) {
      for (let j = 0; j < N_JOINTS; j++) {
        const a = viaBinding.frames[f][j];
        const b = viaCli.frames[f][j];
        expect(a === null).toBe(b === null);
        if (a && b) {
          for (let c = 0; c < 3; c++) {
            expect(Math.abs(a[c] - b[c])).toBeLessThanOrEqual(1e-12);
          }
        }
      }
    }
  });
});

describe('baselineArray', () => {
  it('matches the CLI --baseline output', () => {
    const frames = randomFrames(5);
    const viaBinding = baselineArray(frames, 'kinect25');

    const { dir, path } = writeInputFile(frames);
    const out = join(dir, 'baseline.json');
    cliOnFile(['convert', path, '--baseline', '-o', out]);
    const viaCli = JSON.parse(readFileSync(out, 'utf-8'));

    expect(viaBinding.layout).toEqual(viaCli.layout);
    expect(maxAbsDiff(viaBinding.values, viaCli.frames)).toBeLessThanOrEqual(1e-12);
  });
});

describe('formats', () => {
  it('lists the built-in keypoint sets', () => {
    expect(formats()).toEqual(['coco17', 'kinect25', 'openpose25']);
  });
});

describe('errors', () => {
  it('propagates CLI failures as CliError with the diagnostic line', () => {
    expect(() => convertArray(randomFrames(6), 'mystery99')).toThrowError(CliError);
    try {
      convertArray(randomFrames(6), 'mystery99');
    } catch (e) {
      const err = e as CliError;
      expect(err.exitCode).toBe(1);
      expect(err.stderr).toContain('E_FORMAT');
    }
  });

  it('rejects mis-shaped typed arrays locally', () => {
    expect(() =>
      convertArray({ data: new Float64Array(10), frames: 2, joints: 25 }, 'kinect25'),
    ).toThrowError(/expected/);
  });
});
