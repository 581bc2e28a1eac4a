use super::ast::Pos;
use super::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(i128),
    Var,
    Proc,
    Invariant,
    If,
    Else,
    Return,
    Int,
    Exists,
    Forall,
    True,
    False,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Assign,
    Dot,
    Op(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(x) => format!("identifier `{x}`"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Eof => "end of input".to_string(),
            Tok::Op(s) => format!("`{s}`"),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Var => "var",
            Tok::Proc => "proc",
            Tok::Invariant => "invariant",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::Return => "return",
            Tok::Int => "int",
            Tok::Exists => "exists",
            Tok::Forall => "forall",
            Tok::True => "true",
            Tok::False => "false",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Assign => ":=",
            Tok::Dot => ".",
            Tok::Op(s) => s,
            Tok::Ident(_) | Tok::Num(_) | Tok::Eof => "",
        }
    }
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '#' | '\'' | '~')
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let bump = |i: &mut usize, line: &mut u32, col: &mut u32| {
        if chars[*i] == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *i += 1;
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos::new(line, col);
        if c.is_whitespace() {
            bump(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump(&mut i, &mut line, &mut col);
            bump(&mut i, &mut line, &mut col);
            loop {
                if i >= chars.len() {
                    return Err(ParseError::new(
                        ParseErrorKind::Lexical,
                        pos,
                        "unterminated block comment",
                    ));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump(&mut i, &mut line, &mut col);
                    bump(&mut i, &mut line, &mut col);
                    break;
                }
                bump(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump(&mut i, &mut line, &mut col);
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<i128>().map_err(|_| {
                ParseError::new(ParseErrorKind::Lexical, pos, format!("integer literal {text} out of range"))
            })?;
            if i < chars.len() && is_ident_start(chars[i]) {
                return Err(ParseError::new(
                    ParseErrorKind::Lexical,
                    pos,
                    format!("malformed number `{text}{}`", chars[i]),
                ));
            }
            out.push((Tok::Num(n), pos));
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_continue(chars[i]) {
                bump(&mut i, &mut line, &mut col);
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "var" => Tok::Var,
                "proc" => Tok::Proc,
                "invariant" => Tok::Invariant,
                "if" => Tok::If,
                "else" => Tok::Else,
                "return" => Tok::Return,
                "int" => Tok::Int,
                "exists" => Tok::Exists,
                "forall" => Tok::Forall,
                "true" => Tok::True,
                "false" => Tok::False,
                _ => Tok::Ident(word),
            };
            out.push((tok, pos));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let next2 = chars.get(i + 2).copied();
        let (tok, len) = match (c, next, next2) {
            ('=', Some('='), Some('>')) => (Tok::Op("==>"), 3),
            ('=', Some('='), _) => (Tok::Op("=="), 2),
            ('=', _, _) => (Tok::Op("=="), 1),
            ('!', Some('='), _) => (Tok::Op("!="), 2),
            ('<', Some('='), _) => (Tok::Op("<="), 2),
            ('>', Some('='), _) => (Tok::Op(">="), 2),
            ('&', Some('&'), _) => (Tok::Op("&&"), 2),
            ('|', Some('|'), _) => (Tok::Op("||"), 2),
            (':', Some('='), _) => (Tok::Assign, 2),
            ('!', _, _) => (Tok::Op("!"), 1),
            ('<', _, _) => (Tok::Op("<"), 1),
            ('>', _, _) => (Tok::Op(">"), 1),
            ('+', _, _) => (Tok::Op("+"), 1),
            ('-', _, _) => (Tok::Op("-"), 1),
            ('*', _, _) => (Tok::Op("*"), 1),
            ('/', _, _) => (Tok::Op("/"), 1),
            ('%', _, _) => (Tok::Op("%"), 1),
            ('(', _, _) => (Tok::LParen, 1),
            (')', _, _) => (Tok::RParen, 1),
            ('{', _, _) => (Tok::LBrace, 1),
            ('}', _, _) => (Tok::RBrace, 1),
            ('[', _, _) => (Tok::LBracket, 1),
            (']', _, _) => (Tok::RBracket, 1),
            (',', _, _) => (Tok::Comma, 1),
            (';', _, _) => (Tok::Semi, 1),
            (':', _, _) => (Tok::Colon, 1),
            ('.', _, _) => (Tok::Dot, 1),
            _ => {
                return Err(ParseError::new(
                    ParseErrorKind::Lexical,
                    pos,
                    format!("unexpected character `{c}`"),
                ))
            }
        };
        for _ in 0..len {
            bump(&mut i, &mut line, &mut col);
        }
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos::new(line, col)));
    Ok(out)
}
