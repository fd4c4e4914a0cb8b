use super::ast::SourcePos;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(String),
    Float(String),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: SourcePos,
}

// Longest first so that `<=` wins over `<`.
const PUNCTS: [&str; 27] = [
    "&&", "||", "==", "!=", "<=", ">=", "++", "--", "+=", "-=", "{", "}", "(", ")", ";", ",", ".",
    "=", "?", ":", "<", ">", "+", "-", "*", "/", "%",
];

const UNSUPPORTED_PUNCT: [char; 7] = ['[', ']', '!', '&', '|', '@', '~'];

pub fn tokenize(src: &str, file: &str) -> Result<Vec<Token>, FrontendError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    let err = |line, col, message: String| FrontendError::Syntax {
        file: file.to_string(),
        line,
        col,
        message,
    };

    while i < chars.len() {
        let c = chars[i];
        let start = SourcePos::new(line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            col += 2;
            loop {
                if i >= chars.len() {
                    return Err(err(
                        start.line,
                        start.col,
                        "unterminated block comment".into(),
                    ));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    i += 2;
                    col += 2;
                    break;
                }
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == '$' {
            let s = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$')
            {
                i += 1;
            }
            col += (i - s) as u32;
            out.push(Token {
                tok: Tok::Ident(chars[s..i].iter().collect()),
                pos: start,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut float = false;
            if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                float = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i].is_alphabetic() || chars[i] == '_') {
                return Err(err(
                    line,
                    col + (i - s) as u32,
                    format!("unsupported numeric suffix '{}'", chars[i]),
                ));
            }
            let text: String = chars[s..i].iter().collect();
            col += (i - s) as u32;
            out.push(Token {
                tok: if float {
                    Tok::Float(text)
                } else {
                    Tok::Int(text)
                },
                pos: start,
            });
            continue;
        }
        if c == '"' {
            let s = i;
            i += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(err(
                            start.line,
                            start.col,
                            "unterminated string literal".into(),
                        ))
                    }
                    Some('\\') => i += 2,
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            col += (i - s) as u32;
            out.push(Token {
                tok: Tok::Str(chars[s..i].iter().collect()),
                pos: start,
            });
            continue;
        }
        if c == '\'' {
            return Err(err(
                line,
                col,
                "character literals are not supported".into(),
            ));
        }
        if UNSUPPORTED_PUNCT.contains(&c) {
            // `&&` / `||` are handled below; a lone `&`, `|`, `!` or brackets are outside the subset.
            let pair: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            if pair != "&&" && pair != "||" && pair != "!=" {
                let what = match c {
                    '[' | ']' => "arrays are not supported".to_string(),
                    '@' => "annotations are not supported".to_string(),
                    _ => format!("unsupported operator '{c}'"),
                };
                return Err(err(line, col, what));
            }
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(&p) => {
                if matches!(p, "++" | "--" | "+=" | "-=") {
                    return Err(err(line, col, format!("operator '{p}' is not supported")));
                }
                i += p.len();
                col += p.len() as u32;
                out.push(Token {
                    tok: Tok::Punct(p),
                    pos: start,
                });
            }
            None => return Err(err(line, col, format!("unexpected character '{c}'"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: SourcePos::new(line, col),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src, "t.java")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn splits_operators_longest_first() {
        assert_eq!(
            kinds("a<=b&&c"),
            vec![
                Tok::Ident("a".into()),
                Tok::Punct("<="),
                Tok::Ident("b".into()),
                Tok::Punct("&&"),
                Tok::Ident("c".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn literals_and_comments() {
        let toks = kinds("// hi\n 42 3.5 \"a\\\"b\" /* x\ny */ z");
        assert_eq!(
            toks,
            vec![
                Tok::Int("42".into()),
                Tok::Float("3.5".into()),
                Tok::Str("\"a\\\"b\"".into()),
                Tok::Ident("z".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("a\n  b", "t.java").unwrap();
        assert_eq!((toks[1].pos.line, toks[1].pos.col), (2, 3));
    }

    #[test]
    fn rejects_arrays_and_increments() {
        assert!(tokenize("int[] a;", "t").is_err());
        assert!(tokenize("i++;", "t").is_err());
        assert!(tokenize("!a", "t").is_err());
    }
}
