// Sentence boundary rules, kept in lockstep with the engine's segmenter:
// split after '.', '!' or '?' followed by whitespace or end of text, unless
// the period ends a whitelisted abbreviation. Segments come back with their
// internal whitespace collapsed to single spaces.

const TERMINALS = new Set(['.', '!', '?'])

const ABBREVIATIONS = new Set(['mr.', 'mrs.', 'dr.', 'st.', 'e.g.', 'i.e.', 'etc.'])

const OPENERS = new Set(['(', '[', '{', '"', "'"])

const WHITESPACE = /\s/u

function isAbbreviation(text: string, dotIndex: number): boolean {
  let start = dotIndex
  while (start > 0 && !WHITESPACE.test(text[start - 1])) start -= 1
  let word = text.slice(start, dotIndex + 1)
  let lead = 0
  while (lead < word.length && OPENERS.has(word[lead])) lead += 1
  return ABBREVIATIONS.has(word.slice(lead).toLowerCase())
}

export function collapseWhitespace(text: string): string {
  return text.split(/\s+/u).filter(Boolean).join(' ')
}

export function segmentSentences(text: string): string[] {
  const sentences: string[] = []
  let begin = 0
  for (let i = 0; i < text.length; i += 1) {
    const ch = text[i]
    if (!TERMINALS.has(ch)) continue
    if (i + 1 < text.length && !WHITESPACE.test(text[i + 1])) continue
    if (ch === '.' && isAbbreviation(text, i)) continue
    const piece = collapseWhitespace(text.slice(begin, i + 1))
    if (piece) sentences.push(piece)
    begin = i + 1
  }
  const tail = collapseWhitespace(text.slice(begin))
  if (tail) sentences.push(tail)
  return sentences
}
