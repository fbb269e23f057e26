//! Word tokenizer for revision text.
//!
//! A token is a maximal run of alphanumeric characters, a doubled markup
//! bracket (`[[`, `]]`, `{{`, `}}`), or any other single non-whitespace
//! character. Whitespace only separates tokens.

const MARKUP_PAIRS: [char; 4] = ['[', ']', '{', '}'];

pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if c.is_alphanumeric() {
            let mut end = start + c.len_utf8();
            while let Some(&(i, next)) = chars.peek() {
                if !next.is_alphanumeric() {
                    break;
                }
                end = i + next.len_utf8();
                chars.next();
            }
            tokens.push(text[start..end].to_string());
        } else if MARKUP_PAIRS.contains(&c) && chars.peek().map(|&(_, n)| n) == Some(c) {
            chars.next();
            tokens.push(format!("{c}{c}"));
        } else {
            tokens.push(c.to_string());
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Hello, world"), ["Hello", ",", "world"]);
        assert_eq!(tokenize("[[Stone Age]]"), ["[[", "Stone", "Age", "]]"]);
    }

    #[test]
    fn triple_bracket_pairs_greedily() {
        assert_eq!(tokenize("[[[x"), ["[[", "[", "x"]);
        assert_eq!(
            tokenize("{{cite|a=1}}"),
            ["{{", "cite", "|", "a", "=", "1", "}}"]
        );
    }

    #[test]
    fn signature_shape() {
        let t = tokenize("[[User:Alice|Alice]] 12:34, 5 March 2012 (UTC)");
        assert_eq!(
            t,
            [
                "[[", "User", ":", "Alice", "|", "Alice", "]]", "12", ":", "34", ",", "5", "March",
                "2012", "(", "UTC", ")"
            ]
        );
    }

    #[test]
    fn unicode_words() {
        assert_eq!(tokenize("Ærø  café—naïve"), ["Ærø", "café", "—", "naïve"]);
    }
}
