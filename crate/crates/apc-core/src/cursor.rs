//! Placeholder sentinel handling.
//!
//! File formats spell the placeholder as the literal string `<|cursor|>`.
//! In memory it is the single private-use character U+E000 so that length
//! arithmetic and alignment treat it as one atomic unit. Normalization is
//! idempotent; denormalization restores the file form.

/// In-memory sentinel character.
pub const CURSOR_CHAR: char = '\u{e000}';

/// In-memory sentinel as a string slice (one character).
pub const CURSOR_STR: &str = "\u{e000}";

/// Sentinel spelling used in files and on the wire.
pub const CURSOR_LITERAL: &str = "<|cursor|>";

/// Replace every literal `<|cursor|>` with the sentinel character.
pub fn normalize(text: &str) -> String {
    text.replace(CURSOR_LITERAL, CURSOR_STR)
}

/// Replace every sentinel character with the literal `<|cursor|>`.
pub fn denormalize(text: &str) -> String {
    text.replace(CURSOR_CHAR, CURSOR_LITERAL)
}

pub fn contains_cursor(text: &str) -> bool {
    text.contains(CURSOR_CHAR)
}

pub fn count_cursors(text: &str) -> usize {
    text.chars().filter(|&c| c == CURSOR_CHAR).count()
}

/// Remove all sentinel characters.
pub fn strip_cursors(text: &str) -> String {
    text.chars().filter(|&c| c != CURSOR_CHAR).collect()
}
