import * as fs from 'node:fs';

/** Binary PPM with a simple deterministic gradient pattern. */
export function writePpm(path: string, width: number, height: number, seedByte = 0): void {
  const header = Buffer.from(`P6\n${width} ${height}\n255\n`, 'ascii');
  const pixels = Buffer.alloc(width * height * 3);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const i = 3 * (y * width + x);
      pixels[i] = (x * 7 + seedByte) % 256;
      pixels[i + 1] = (y * 11 + seedByte) % 256;
      pixels[i + 2] = (x + y + seedByte) % 256;
    }
  }
  fs.writeFileSync(path, Buffer.concat([header, pixels]));
}

/** 16-bit PCM mono WAV of a sine tone. */
export function writeWavSine(path: string, freq: number, rate: number, seconds: number): void {
  const n = Math.floor(rate * seconds);
  const data = Buffer.alloc(n * 2);
  for (let i = 0; i < n; i++) {
    const v = Math.round(0.5 * 32767 * Math.sin((2 * Math.PI * freq * i) / rate));
    data.writeInt16LE(v, i * 2);
  }
  const header = Buffer.alloc(44);
  header.write('RIFF', 0, 'ascii');
  header.writeUInt32LE(36 + data.length, 4);
  header.write('WAVE', 8, 'ascii');
  header.write('fmt ', 12, 'ascii');
  header.writeUInt32LE(16, 16);
  header.writeUInt16LE(1, 20); // PCM
  header.writeUInt16LE(1, 22); // mono
  header.writeUInt32LE(rate, 24);
  header.writeUInt32LE(rate * 2, 28);
  header.writeUInt16LE(2, 32);
  header.writeUInt16LE(16, 34);
  header.write('data', 36, 'ascii');
  header.writeUInt32LE(data.length, 40);
  fs.writeFileSync(path, Buffer.concat([header, data]));
}
