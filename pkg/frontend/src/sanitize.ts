/**
 * Allowlist HTML sanitizer for rendering post bodies.
 *
 * Posts come from a public Q&A dump, so bodies are untrusted. Only plain
 * formatting survives; code and pre blocks are kept (annotation criteria
 * often hinge on component names inside snippets) and rendered monospaced.
 */

const ALLOWED_TAGS = new Set([
  'p', 'br', 'b', 'i', 'em', 'strong', 'ul', 'ol', 'li',
  'blockquote', 'code', 'pre', 'h1', 'h2', 'h3', 'a',
]);

export function sanitizeHtml(html: string): HTMLElement {
  const doc = new DOMParser().parseFromString(html, 'text/html');
  const container = document.createElement('div');
  container.className = 'post-body';
  for (const child of Array.from(doc.body.childNodes)) {
    const cleaned = cleanNode(child);
    if (cleaned) {
      container.appendChild(cleaned);
    }
  }
  return container;
}

function cleanNode(node: Node): Node | null {
  if (node.nodeType === Node.TEXT_NODE) {
    return document.createTextNode(node.textContent ?? '');
  }
  if (node.nodeType !== Node.ELEMENT_NODE) {
    return null;
  }
  const element = node as Element;
  const tag = element.tagName.toLowerCase();
  if (tag === 'script' || tag === 'style') {
    return null; // drop content as well as the tag
  }
  if (!ALLOWED_TAGS.has(tag)) {
    // unwrap unknown tags, keep their (cleaned) children
    const fragment = document.createDocumentFragment();
    for (const child of Array.from(element.childNodes)) {
      const cleaned = cleanNode(child);
      if (cleaned) {
        fragment.appendChild(cleaned);
      }
    }
    return fragment;
  }
  const copy = document.createElement(tag);
  if (tag === 'a') {
    const href = element.getAttribute('href') ?? '';
    if (href.startsWith('http://') || href.startsWith('https://')) {
      copy.setAttribute('href', href);
      copy.setAttribute('rel', 'noopener noreferrer');
      copy.setAttribute('target', '_blank');
    }
  }
  if (tag === 'code' || tag === 'pre') {
    copy.className = 'mono';
  }
  for (const child of Array.from(element.childNodes)) {
    const cleaned = cleanNode(child);
    if (cleaned) {
      copy.appendChild(cleaned);
    }
  }
  return copy;
}
