import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import { spawnSync } from 'node:child_process';

import { afterEach, beforeEach, describe, expect, it } from 'vitest';

import { decodeEmb1 } from '../src/emb1.js';
import { ModelError } from '../src/features.js';
import { ExportJob, runExport } from '../src/export.js';
import { writePpm, writeWavSine } from './helpers.js';

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), 'emb-export-'));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

function job(overrides: Partial<ExportJob> = {}): ExportJob {
  return {
    inputDir: path.join(dir, 'in'),
    modality: 'image',
    model: 'imagebind',
    output: path.join(dir, 'out.emb1'),
    batchSize: 4,
    ...overrides,
  };
}

describe('runExport', () => {
  it('writes a valid empty container for an empty directory', () => {
    fs.mkdirSync(path.join(dir, 'in'));
    const result = runExport(job());
    expect(result.written).toBe(0);
    const m = decodeEmb1(fs.readFileSync(path.join(dir, 'out.emb1')));
    expect(m.ids).toEqual([]);
    expect(m.dim).toBe(1024);
  });

  it('produces identical rows for identical images', () => {
    fs.mkdirSync(path.join(dir, 'in'));
    writePpm(path.join(dir, 'in', 'one.ppm'), 64, 48, 10);
    writePpm(path.join(dir, 'in', 'two.ppm'), 64, 48, 10);
    runExport(job());
    const m = decodeEmb1(fs.readFileSync(path.join(dir, 'out.emb1')));
    expect(m.ids).toEqual(['one', 'two']);
    const a = m.data.subarray(0, m.dim);
    const b = m.data.subarray(m.dim, 2 * m.dim);
    expect(Array.from(a)).toEqual(Array.from(b));
    // cosine similarity of identical rows is exactly 1
    let dot = 0, na = 0, nb = 0;
    for (let i = 0; i < m.dim; i++) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    expect(dot / Math.sqrt(na * nb)).toBeCloseTo(1.0, 12);
  });

  it('is deterministic across runs', () => {
    fs.mkdirSync(path.join(dir, 'in'));
    writeWavSine(path.join(dir, 'in', 'tone.wav'), 440, 16000, 0.5);
    runExport(job({ modality: 'audio', model: 'vggish', output: path.join(dir, 'a.emb1') }));
    runExport(job({ modality: 'audio', model: 'vggish', output: path.join(dir, 'b.emb1') }));
    expect(
      Buffer.compare(
        fs.readFileSync(path.join(dir, 'a.emb1')),
        fs.readFileSync(path.join(dir, 'b.emb1')),
      ),
    ).toBe(0);
  });

  it('skips and counts corrupted audio files', () => {
    fs.mkdirSync(path.join(dir, 'in'));
    writeWavSine(path.join(dir, 'in', 'good1.wav'), 440, 16000, 0.25);
    writeWavSine(path.join(dir, 'in', 'good2.wav'), 220, 16000, 0.25);
    const good = fs.readFileSync(path.join(dir, 'in', 'good1.wav'));
    fs.writeFileSync(path.join(dir, 'in', 'broken.wav'), good.subarray(0, 30));
    fs.writeFileSync(path.join(dir, 'in', 'garbage.wav'), Buffer.from('not audio'));
    const result = runExport(job({ modality: 'audio', model: 'vggish' }));
    expect(result.written).toBe(2);
    expect(result.skipped).toBe(2);
    expect(result.skippedFiles.sort()).toEqual(['broken.wav', 'garbage.wav']);
    const sidecar = JSON.parse(fs.readFileSync(path.join(dir, 'out.emb1.json'), 'utf-8'));
    expect(sidecar.skipped).toBe(2);
    expect(sidecar.count).toBe(2);
    expect(sidecar.model).toBe('vggish-local');
  });

  it('fails when every file is corrupt', () => {
    fs.mkdirSync(path.join(dir, 'in'));
    fs.writeFileSync(path.join(dir, 'in', 'bad.wav'), Buffer.from('x'));
    expect(() => runExport(job({ modality: 'audio', model: 'vggish' }))).toThrow(
      'all input files failed',
    );
  });

  it('rejects unknown models and unsupported modality combinations', () => {
    fs.mkdirSync(path.join(dir, 'in'));
    expect(() => runExport(job({ model: 'clip' as never }))).toThrow(ModelError);
    expect(() => runExport(job({ model: 'vggish', modality: 'image' }))).toThrow(ModelError);
  });

  it('uses file stems as ids and sorts them', () => {
    fs.mkdirSync(path.join(dir, 'in'));
    writePpm(path.join(dir, 'in', 'zebra.ppm'), 8, 8);
    writePpm(path.join(dir, 'in', 'apple.ppm'), 8, 8);
    runExport(job());
    const m = decodeEmb1(fs.readFileSync(path.join(dir, 'out.emb1')));
    expect(m.ids).toEqual(['apple', 'zebra']);
  });

  it('output reloads with the Python toolkit', () => {
    fs.mkdirSync(path.join(dir, 'in'));
    writePpm(path.join(dir, 'in', 'art1.ppm'), 32, 32, 1);
    writePpm(path.join(dir, 'in', 'art2.ppm'), 32, 32, 2);
    runExport(job());
    const script = [
      'import sys',
      'from xmaudio import load_embeddings',
      'm = load_embeddings(sys.argv[1])',
      'assert m.ids == ["art1", "art2"], m.ids',
      'assert m.dim == 1024',
      'print("ok")',
    ].join('\n');
    const res = spawnSync('python3', ['-c', script, path.join(dir, 'out.emb1')], {
      encoding: 'utf-8',
    });
    expect(res.status, res.stderr).toBe(0);
    expect(res.stdout.trim()).toBe('ok');
  });
});
