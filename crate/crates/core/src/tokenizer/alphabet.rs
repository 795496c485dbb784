//! GPT-2 style byte alphabet: every byte maps to one printable character.
//!
//! Printable Latin-1 bytes map to themselves; the remaining 68 bytes map to
//! U+0100 onward in byte order, so space becomes `Ġ` and newline `Ċ`.

use std::sync::OnceLock;

struct Tables {
    to_char: [char; 256],
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let printable = |b: u32| (0x21..=0x7E).contains(&b) || (0xA1..=0xAC).contains(&b) || (0xAE..=0xFF).contains(&b);
        let mut to_char = ['\0'; 256];
        let mut next = 256u32;
        for b in 0..256u32 {
            to_char[b as usize] = if printable(b) {
                char::from_u32(b).unwrap()
            } else {
                let c = char::from_u32(next).unwrap();
                next += 1;
                c
            };
        }
        Tables { to_char }
    })
}

#[inline]
pub fn byte_to_char(b: u8) -> char {
    tables().to_char[b as usize]
}

pub fn char_to_byte(c: char) -> Option<u8> {
    let t = tables();
    let cp = c as u32;
    if cp < 256 && t.to_char[cp as usize] == c {
        return Some(cp as u8);
    }
    if (256..256 + 68).contains(&cp) {
        return t.to_char.iter().position(|&x| x == c).map(|b| b as u8);
    }
    None
}

/// Marker-string form of a byte sequence.
pub fn bytes_to_marker(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| byte_to_char(b)).collect()
}

/// Inverse of [`bytes_to_marker`]; `None` if a character is outside the alphabet.
pub fn marker_to_bytes(s: &str) -> Option<Vec<u8>> {
    s.chars().map(char_to_byte).collect()
}
