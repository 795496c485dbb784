//! Whitespace pre-tokenisation over raw bytes.
//!
//! A pre-token is either a run of non-whitespace bytes, optionally preceded by
//! a single space (`" word"` → `Ġword`), or a run of whitespace. When a
//! whitespace run is followed by a word and ends in a space, that last space
//! is handed to the word. Concatenating the pre-tokens always reproduces the
//! input exactly.

#[inline]
pub fn is_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0B | 0x0C)
}

/// Splits `bytes` into pre-token slices.
pub fn pretokenize(bytes: &[u8]) -> Vec<&[u8]> {
    let mut out = Vec::new();
    let n = bytes.len();
    let mut i = 0;
    while i < n {
        if is_ws(bytes[i]) {
            let mut j = i;
            while j < n && is_ws(bytes[j]) {
                j += 1;
            }
            if j < n && bytes[j - 1] == b' ' {
                if j - 1 > i {
                    out.push(&bytes[i..j - 1]);
                }
                let k = word_end(bytes, j);
                out.push(&bytes[j - 1..k]);
                i = k;
            } else {
                out.push(&bytes[i..j]);
                i = j;
            }
        } else {
            let k = word_end(bytes, i);
            out.push(&bytes[i..k]);
            i = k;
        }
    }
    out
}

fn word_end(bytes: &[u8], mut k: usize) -> usize {
    while k < bytes.len() && !is_ws(bytes[k]) {
        k += 1;
    }
    k
}
