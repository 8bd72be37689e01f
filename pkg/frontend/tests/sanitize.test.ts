import { describe, expect, it } from 'vitest';

import { sanitizeHtml } from '../src/sanitize.js';

describe('sanitizeHtml', () => {
  it('keeps plain formatting and text', () => {
    const node = sanitizeHtml('<p>MySQL is <b>slow</b></p>');
    expect(node.textContent).toBe('MySQL is slow');
    expect(node.querySelector('b')).not.toBeNull();
  });

  it('drops script and style elements entirely', () => {
    const node = sanitizeHtml('<p>safe</p><script>alert(1)</script><style>p{}</style>');
    expect(node.textContent).toBe('safe');
    expect(node.querySelector('script')).toBeNull();
  });

  it('unwraps unknown tags but keeps their text', () => {
    const node = sanitizeHtml('<article><span>inner text</span></article>');
    expect(node.textContent).toBe('inner text');
    expect(node.querySelector('article')).toBeNull();
    expect(node.querySelector('span')).toBeNull();
  });

  it('renders code blocks monospaced', () => {
    const node = sanitizeHtml('<pre><code>SELECT 1</code></pre>');
    expect(node.querySelector('pre')?.className).toBe('mono');
    expect(node.querySelector('code')?.className).toBe('mono');
    expect(node.textContent).toBe('SELECT 1');
  });

  it('strips event handlers and javascript urls', () => {
    const node = sanitizeHtml('<a href="javascript:alert(1)" onclick="x()">link</a>');
    const anchor = node.querySelector('a');
    expect(anchor?.getAttribute('href')).toBeNull();
    expect(anchor?.getAttribute('onclick')).toBeNull();

    const ok = sanitizeHtml('<a href="https://example.org/q">link</a>');
    expect(ok.querySelector('a')?.getAttribute('href')).toBe('https://example.org/q');
  });
});
