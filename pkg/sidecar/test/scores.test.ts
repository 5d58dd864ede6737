import { describe, expect, it } from 'vitest';

import { charHashProvider, cosine, resolveProvider, tokenize } from '../src/embedding.js';
import { bertScore, cometScore } from '../src/scores.js';

describe('tokenize', () => {
  it('splits words and peels punctuation', () => {
    expect(tokenize('The cat.')).toEqual(['The', 'cat', '.']);
  });

  it('handles devanagari', () => {
    expect(tokenize('राम, श्याम')).toEqual(['राम', ',', 'श्याम']);
  });

  it('empty text gives no tokens', () => {
    expect(tokenize('   ')).toEqual([]);
  });
});

describe('embeddings', () => {
  it('identical tokens embed identically', () => {
    const [a, b] = charHashProvider.embedTokens(['शब्द', 'शब्द']);
    expect(cosine(a, b)).toBeCloseTo(1.0, 12);
  });

  it('different tokens are not identical', () => {
    const [a, b] = charHashProvider.embedTokens(['alpha', 'omega']);
    expect(cosine(a, b)).toBeLessThan(0.999);
  });

  it('unknown model id rejected', () => {
    expect(() => resolveProvider('bert-large-uncased')).toThrow(/unknown model/);
  });
});

describe('bertScore', () => {
  it('identical pair scores 1', () => {
    const { p, r, f1 } = bertScore(charHashProvider, 'hello world', 'hello world');
    expect(p).toBeCloseTo(1.0, 9);
    expect(r).toBeCloseTo(1.0, 9);
    expect(f1).toBeGreaterThanOrEqual(0.99);
    expect(f1).toBeLessThanOrEqual(1.0);
  });

  it('near-identical pair scores above unrelated pair', () => {
    const near = bertScore(charHashProvider, 'the cat sat down', 'the cat sat');
    const far = bertScore(charHashProvider, 'the cat sat down', 'quantum flux rose');
    expect(near.f1).toBeGreaterThan(far.f1);
  });

  it('empty candidate scores 0 against text', () => {
    expect(bertScore(charHashProvider, '', 'something').f1).toBe(0);
  });

  it('both empty and equal scores 1', () => {
    expect(bertScore(charHashProvider, '', '').f1).toBe(1);
  });

  it('symmetric in p and r under swap', () => {
    const ab = bertScore(charHashProvider, 'a b c', 'c d');
    const ba = bertScore(charHashProvider, 'c d', 'a b c');
    expect(ab.p).toBeCloseTo(ba.r, 12);
    expect(ab.r).toBeCloseTo(ba.p, 12);
  });
});

describe('cometScore', () => {
  it('identity triple scores 1', () => {
    const score = cometScore(charHashProvider, 'same text', 'same text', 'same text');
    expect(score).toBeCloseTo(1.0, 9);
  });

  it('unrelated texts can go negative', () => {
    const score = cometScore(
      charHashProvider,
      'स्रोत पाठ यहाँ',
      'zzqj xxwk vvrr',
      'completely different words',
    );
    expect(score).toBeLessThan(0);
  });

  it('deterministic', () => {
    const one = cometScore(charHashProvider, 's', 'c words here', 'r words');
    const two = cometScore(charHashProvider, 's', 'c words here', 'r words');
    expect(one).toBe(two);
  });
});
