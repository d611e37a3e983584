//! Regex-shape tokenizer for clinical free text.
//!
//! Splits on Unicode whitespace, strips punctuation off token edges (each
//! stripped edge run becomes its own `Punct` token) and classifies the core:
//!
//! * slash compounds like `c/w` or `n/v/f/c` stay whole,
//! * abbreviation-shaped tokens (`TTE`, `AKI`, `H.D`) keep their case,
//! * purely numeric tokens collapse to the `<num>` placeholder,
//! * everything else is a lowercased word.
//!
//! Spans are byte offsets into the source text; concatenating the spans
//! reproduces every non-whitespace byte of the input.

/// Placeholder surface for numeric tokens (vitals, labs, doses).
pub const NUM_PLACEHOLDER: &str = "<num>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Word,
    AbbrevShaped,
    SlashCompound,
    Punct,
}

impl TokenKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TokenKind::Word => "word",
            TokenKind::AbbrevShaped => "abbrev_shaped",
            TokenKind::SlashCompound => "slash_compound",
            TokenKind::Punct => "punct",
        }
    }
}

/// Byte range into the source document text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub span: Span,
    pub kind: TokenKind,
}

impl Token {
    fn new(surface: impl Into<String>, start: usize, end: usize, kind: TokenKind) -> Self {
        Token {
            surface: surface.into(),
            span: Span { start, end },
            kind,
        }
    }
}

/// True for tokens like `c/w` or `n/v/f/c`: two or more segments of 1-4
/// alphabetic characters joined by `/`.
pub fn is_slash_compound(s: &str) -> bool {
    let segments: Vec<&str> = s.split('/').collect();
    segments.len() >= 2
        && segments
            .iter()
            .all(|seg| (1..=4).contains(&seg.chars().count()) && seg.chars().all(|c| c.is_alphabetic()))
}

/// Shape rule for abbreviation-like tokens: 2-10 chars, at least two
/// alphabetic, every alphabetic char uppercase, the rest digits or periods.
/// Covers TTE, AKI, OD, H.D and friends.
pub fn is_abbrev_shaped(s: &str) -> bool {
    let len = s.chars().count();
    if !(2..=10).contains(&len) {
        return false;
    }
    let mut alpha = 0;
    for c in s.chars() {
        if c.is_alphabetic() {
            if !c.is_uppercase() {
                return false;
            }
            alpha += 1;
        } else if !(c.is_ascii_digit() || c == '.') {
            return false;
        }
    }
    alpha >= 2
}

fn is_numeric_only(s: &str) -> bool {
    s.chars().any(|c| c.is_numeric()) && !s.chars().any(|c| c.is_alphabetic())
}

/// Char-wise lowercase that never changes the character count, so folding
/// cannot alter a token's shape class (full `to_lowercase` expands e.g.
/// U+0130 into a letter plus a combining mark).
fn fold_lower(s: &str) -> String {
    s.chars()
        .map(|c| {
            let mut lower = c.to_lowercase();
            match (lower.next(), lower.next()) {
                (Some(l), None) => l,
                _ => c,
            }
        })
        .collect()
}

fn classify_core(core: &str) -> (String, TokenKind) {
    if is_slash_compound(core) {
        (fold_lower(core), TokenKind::SlashCompound)
    } else if is_abbrev_shaped(core) {
        (core.to_string(), TokenKind::AbbrevShaped)
    } else if is_numeric_only(core) {
        (NUM_PLACEHOLDER.to_string(), TokenKind::Word)
    } else {
        (fold_lower(core), TokenKind::Word)
    }
}

/// Tokenize one document. Pure and deterministic; empty input gives an
/// empty sequence.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chunk_start = None;
    let mut iter = text.char_indices().peekable();

    while let Some((i, c)) = iter.next() {
        if c.is_whitespace() {
            if let Some(start) = chunk_start.take() {
                tokenize_chunk(text, start, i, &mut tokens);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
        if iter.peek().is_none() && !c.is_whitespace() {
            let start = chunk_start.take().unwrap_or(i);
            tokenize_chunk(text, start, text.len(), &mut tokens);
        }
    }
    tokens
}

fn tokenize_chunk(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let chunk = &text[start..end];

    // The numeric placeholder itself must survive re-tokenization.
    if chunk == NUM_PLACEHOLDER {
        out.push(Token::new(NUM_PLACEHOLDER, start, end, TokenKind::Word));
        return;
    }

    let core_rel_start = chunk
        .char_indices()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, _)| i);

    let Some(core_rel_start) = core_rel_start else {
        // No alphanumeric content: the whole chunk is punctuation.
        out.push(Token::new(chunk, start, end, TokenKind::Punct));
        return;
    };

    let core_rel_end = chunk
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, c)| i + c.len_utf8())
        .expect("chunk has an alphanumeric char");

    if core_rel_start > 0 {
        out.push(Token::new(
            &chunk[..core_rel_start],
            start,
            start + core_rel_start,
            TokenKind::Punct,
        ));
    }

    let core = &chunk[core_rel_start..core_rel_end];
    let (surface, kind) = classify_core(core);
    out.push(Token::new(
        surface,
        start + core_rel_start,
        start + core_rel_end,
        kind,
    ));

    if core_rel_end < chunk.len() {
        out.push(Token::new(
            &chunk[core_rel_end..],
            start + core_rel_end,
            end,
            TokenKind::Punct,
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(tokens: &[Token]) -> Vec<(&str, TokenKind)> {
        tokens.iter().map(|t| (t.surface.as_str(), t.kind)).collect()
    }

    #[test]
    fn icu_sentence_from_intro() {
        let toks = tokenize("STAT TTE c/w RVS.");
        assert_eq!(
            kinds(&toks),
            vec![
                ("STAT", TokenKind::AbbrevShaped),
                ("TTE", TokenKind::AbbrevShaped),
                ("c/w", TokenKind::SlashCompound),
                ("RVS", TokenKind::AbbrevShaped),
                (".", TokenKind::Punct),
            ]
        );
    }

    #[test]
    fn empty_input_gives_no_tokens() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n\t").is_empty());
    }

    #[test]
    fn slash_compound_sentence() {
        let toks = tokenize("No n/v/f/c.");
        assert_eq!(
            kinds(&toks),
            vec![
                ("no", TokenKind::Word),
                ("n/v/f/c", TokenKind::SlashCompound),
                (".", TokenKind::Punct),
            ]
        );
    }

    #[test]
    fn numeric_tokens_become_placeholder() {
        let toks = tokenize("HR 120 BP 130/85 temp 98.6");
        assert_eq!(
            kinds(&toks),
            vec![
                ("HR", TokenKind::AbbrevShaped),
                ("<num>", TokenKind::Word),
                ("BP", TokenKind::AbbrevShaped),
                ("<num>", TokenKind::Word),
                ("temp", TokenKind::Word),
                ("<num>", TokenKind::Word),
            ]
        );
    }

    #[test]
    fn edge_punctuation_split_off() {
        let toks = tokenize("(CHF),");
        assert_eq!(
            kinds(&toks),
            vec![
                ("(", TokenKind::Punct),
                ("CHF", TokenKind::AbbrevShaped),
                ("),", TokenKind::Punct),
            ]
        );
    }

    #[test]
    fn dotted_abbreviation_keeps_interior_period() {
        let toks = tokenize("on H.D. today");
        assert_eq!(
            kinds(&toks),
            vec![
                ("on", TokenKind::Word),
                ("H.D", TokenKind::AbbrevShaped),
                (".", TokenKind::Punct),
                ("today", TokenKind::Word),
            ]
        );
    }

    #[test]
    fn standalone_dash_is_punct() {
        let toks = tokenize("AKI - no CTA.");
        assert_eq!(
            kinds(&toks),
            vec![
                ("AKI", TokenKind::AbbrevShaped),
                ("-", TokenKind::Punct),
                ("no", TokenKind::Word),
                ("CTA", TokenKind::AbbrevShaped),
                (".", TokenKind::Punct),
            ]
        );
    }

    #[test]
    fn long_slash_words_are_not_compounds() {
        let toks = tokenize("nausea/vomiting");
        assert_eq!(kinds(&toks), vec![("nausea/vomiting", TokenKind::Word)]);
    }

    #[test]
    fn spans_are_sorted_and_disjoint() {
        let text = "STAT TTE c/w RVS. AKI - no CTA.";
        let toks = tokenize(text);
        for pair in toks.windows(2) {
            assert!(pair[0].span.end <= pair[1].span.start);
        }
        for t in &toks {
            assert!(t.span.start < t.span.end);
        }
    }

    #[test]
    fn spans_cover_all_non_whitespace_bytes() {
        let text = "  STAT TTE c/w RVS. (AKI) 120/80 ";
        let toks = tokenize(text);
        let mut covered = vec![false; text.len()];
        for t in &toks {
            for (b, slot) in covered
                .iter_mut()
                .enumerate()
                .take(t.span.end)
                .skip(t.span.start)
            {
                assert!(!*slot, "overlapping span at byte {b}");
                *slot = true;
            }
        }
        for (i, c) in text.char_indices() {
            if !c.is_whitespace() {
                assert!(covered[i], "byte {i} ({c:?}) not covered");
            }
        }
    }

    #[test]
    fn abbrev_shape_rules() {
        assert!(is_abbrev_shaped("TTE"));
        assert!(is_abbrev_shaped("OD"));
        assert!(is_abbrev_shaped("H.D"));
        assert!(is_abbrev_shaped("ICU4U"));
        assert!(!is_abbrev_shaped("I"));
        assert!(!is_abbrev_shaped("T2")); // only one alphabetic char
        assert!(!is_abbrev_shaped("No"));
        assert!(!is_abbrev_shaped("stable"));
        assert!(!is_abbrev_shaped("ABCDEFGHIJK")); // too long
        assert!(!is_abbrev_shaped("CT-A")); // hyphen not part of the shape
    }

    #[test]
    fn slash_grammar_rules() {
        assert!(is_slash_compound("c/w"));
        assert!(is_slash_compound("n/v/f/c"));
        assert!(is_slash_compound("and/or"));
        assert!(!is_slash_compound("nausea/vomiting"));
        assert!(!is_slash_compound("a/"));
        assert!(!is_slash_compound("/a"));
        assert!(!is_slash_compound("120/80"));
        assert!(!is_slash_compound("cw"));
    }

    #[test]
    fn num_placeholder_is_stable_under_retokenization() {
        let toks = tokenize("<num>");
        assert_eq!(kinds(&toks), vec![("<num>", TokenKind::Word)]);
    }

    #[test]
    fn case_fold_never_changes_char_count() {
        // U+0130 expands under full lowercasing; the fold keeps it intact
        // so classification is stable under re-tokenization.
        let toks = tokenize("\u{130}/A");
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].kind, TokenKind::SlashCompound);
        let again = tokenize(&toks[0].surface);
        assert_eq!(again[0].kind, TokenKind::SlashCompound);
        assert_eq!(again[0].surface, toks[0].surface);
    }
}
