use std::fmt;

use thiserror::Error;

/// 1-based line and column (columns count characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl Span {
    pub fn new(line: usize, column: usize) -> Self {
        Span { line, column }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

macro_rules! keywords {
    ($($variant:ident => $text:literal,)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Keyword {
            $($variant,)*
        }

        impl Keyword {
            pub fn lookup(word: &str) -> Option<Keyword> {
                let upper = word.to_ascii_uppercase();
                match upper.as_str() {
                    $($text => Some(Keyword::$variant),)*
                    _ => None,
                }
            }

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Keyword::$variant => $text,)*
                }
            }
        }
    };
}

keywords! {
    Alter => "ALTER",
    And => "AND",
    As => "AS",
    Avg => "AVG",
    Begin => "BEGIN",
    Bool => "BOOL",
    By => "BY",
    Call => "CALL",
    Class => "CLASS",
    Count => "COUNT",
    Create => "CREATE",
    DateTime => "DATETIME",
    Delete => "DELETE",
    End => "END",
    Extend => "EXTEND",
    Float => "FLOAT",
    From => "FROM",
    Group => "GROUP",
    Insert => "INSERT",
    Integer => "INTEGER",
    Into => "INTO",
    Key => "KEY",
    Max => "MAX",
    Min => "MIN",
    Not => "NOT",
    Object => "OBJECT",
    Objects => "OBJECTS",
    Of => "OF",
    Or => "OR",
    Realize => "REALIZE",
    Return => "RETURN",
    Select => "SELECT",
    Set => "SET",
    Stored => "STORED",
    String => "STRING",
    Sum => "SUM",
    Tuple => "TUPLE",
    Update => "UPDATE",
    Values => "VALUES",
    View => "VIEW",
    Where => "WHERE",
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn is_keyword(word: &str) -> bool {
    Keyword::lookup(word).is_some() || is_bool_word(word)
}

fn is_bool_word(word: &str) -> bool {
    word.eq_ignore_ascii_case("TRUE") || word.eq_ignore_ascii_case("FALSE")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Identifier,
    DottedPath,
    Integer,
    Float,
    String,
    DateTime,
    Bool,
    Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Exact source text of the token.
    pub lexeme: String,
    pub span: Span,
    /// Byte offset of the lexeme in the source.
    pub offset: usize,
}

impl Token {
    pub fn is_symbol(&self, s: &str) -> bool {
        self.kind == TokenKind::Symbol && self.lexeme == s
    }

    pub fn is_keyword(&self, k: Keyword) -> bool {
        self.kind == TokenKind::Keyword(k)
    }

    /// Decoded contents of a string literal.
    pub fn string_value(&self) -> String {
        let inner = &self.lexeme[1..self.lexeme.len() - 1];
        inner.replace("''", "'")
    }

    /// Contents between the `#` delimiters of a datetime literal.
    pub fn datetime_text(&self) -> &str {
        &self.lexeme[1..self.lexeme.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lexical error at {span}: {message}")]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.column)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

const TWO_CHAR_SYMBOLS: [&str; 6] = ["..", ":=", "<=", ">=", "<>", "!="];
const ONE_CHAR_SYMBOLS: &str = ";,(){}=<>+-*/@.";

/// Splits source text into tokens. Whitespace and `//` comments are skipped.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { src: source, pos: 0, line: 1, column: 1 };
    let mut tokens = Vec::new();
    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek_at(1) == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let start = cur.pos;
        let span = cur.span();
        let kind = if is_ident_start(c) {
            lex_word(&mut cur)
        } else if c.is_ascii_digit() {
            lex_number(&mut cur)
        } else if c == '\'' {
            lex_string(&mut cur, span)?
        } else if c == '#' {
            lex_datetime(&mut cur, span)?
        } else {
            let rest = &source[cur.pos..];
            if let Some(sym) = TWO_CHAR_SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                for _ in 0..sym.len() {
                    cur.bump();
                }
            } else if ONE_CHAR_SYMBOLS.contains(c) {
                cur.bump();
            } else {
                return Err(LexError { span, message: format!("illegal character {c:?}") });
            }
            TokenKind::Symbol
        };
        tokens.push(Token { kind, lexeme: source[start..cur.pos].to_string(), span, offset: start });
    }
    Ok(tokens)
}

fn lex_word(cur: &mut Cursor<'_>) -> TokenKind {
    let start = cur.pos;
    let mut segments = 1;
    loop {
        while cur.peek().is_some_and(is_ident_continue) {
            cur.bump();
        }
        // A '.' continues a dotted path only when an identifier follows directly.
        if cur.peek() == Some('.') && cur.peek_at(1).is_some_and(is_ident_start) {
            cur.bump();
            segments += 1;
        } else {
            break;
        }
    }
    if segments > 1 {
        return TokenKind::DottedPath;
    }
    let word = &cur.src[start..cur.pos];
    if is_bool_word(word) {
        TokenKind::Bool
    } else if let Some(k) = Keyword::lookup(word) {
        TokenKind::Keyword(k)
    } else {
        TokenKind::Identifier
    }
}

fn lex_number(cur: &mut Cursor<'_>) -> TokenKind {
    let mut kind = TokenKind::Integer;
    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
    }
    if cur.peek() == Some('.') && cur.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
        kind = TokenKind::Float;
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let exp_digits = match cur.peek_at(1) {
            Some('+' | '-') => cur.peek_at(2).is_some_and(|c| c.is_ascii_digit()),
            Some(c) => c.is_ascii_digit(),
            None => false,
        };
        if exp_digits {
            kind = TokenKind::Float;
            cur.bump();
            if matches!(cur.peek(), Some('+' | '-')) {
                cur.bump();
            }
            while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                cur.bump();
            }
        }
    }
    kind
}

fn lex_string(cur: &mut Cursor<'_>, span: Span) -> Result<TokenKind, LexError> {
    cur.bump();
    loop {
        match cur.bump() {
            None => return Err(LexError { span, message: "unterminated string literal".into() }),
            Some('\'') => {
                if cur.peek() == Some('\'') {
                    cur.bump();
                } else {
                    return Ok(TokenKind::String);
                }
            }
            Some(_) => {}
        }
    }
}

fn lex_datetime(cur: &mut Cursor<'_>, span: Span) -> Result<TokenKind, LexError> {
    cur.bump();
    loop {
        match cur.bump() {
            None | Some('\n') => return Err(LexError { span, message: "unterminated datetime literal".into() }),
            Some('#') => return Ok(TokenKind::DateTime),
            Some(_) => {}
        }
    }
}
