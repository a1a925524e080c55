//! OpenQASM 3 subset: one flat qubit register and the gates `x`, `cx`, `ccx`
//! and `reset`.
//!
//! The register layout of an adder rides along in a single leading comment,
//! `// layout: {json}`. The parser is a small hand-written lexer plus
//! recursive descent; it reports every problem with a 1-based line/column and
//! never panics, whatever the input bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builders::{AdderVariant, BuiltAdder, RegisterLayout};
use crate::circuit::{Circuit, Gate, GateKind, Wire};

const METADATA_PREFIX: &str = "layout:";
/// Largest register the parser accepts.
pub const MAX_QUBITS: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QasmError {
    #[error("{line}:{col}: syntax error: {msg}")]
    SyntaxError { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: `{construct}` is outside the supported subset")]
    SubsetViolation { line: usize, col: usize, construct: String },
    #[error("{line}:{col}: operand q[{index}] exceeds declared register size {width}")]
    WidthMismatch {
        line: usize,
        col: usize,
        index: usize,
        width: usize,
    },
    #[error("{line}:{col}: duplicate operand q[{wire}]")]
    DuplicateOperand { line: usize, col: usize, wire: Wire },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Metadata {
    variant: Option<AdderVariant>,
    label: String,
    layout: RegisterLayout,
}

/// Exported program text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QasmDocument {
    pub text: String,
}

fn qasm_name(kind: GateKind) -> &'static str {
    match kind {
        GateKind::X => "x",
        GateKind::Cnot => "cx",
        GateKind::Toffoli => "ccx",
        GateKind::Reset => "reset",
    }
}

fn write_program(circuit: &Circuit, metadata: Option<&Metadata>) -> QasmDocument {
    let mut text = String::from("OPENQASM 3.0;\ninclude \"stdgates.inc\";\n");
    if let Some(meta) = metadata {
        let json = serde_json::to_string(meta).expect("layout metadata serializes");
        let _ = writeln!(text, "// {METADATA_PREFIX} {json}");
    }
    let _ = writeln!(text, "qubit[{}] q;", circuit.width());
    for gate in circuit.gates() {
        text.push_str(qasm_name(gate.kind()));
        for (i, w) in gate.operands().iter().enumerate() {
            text.push_str(if i == 0 { " " } else { ", " });
            let _ = write!(text, "q[{w}]");
        }
        text.push_str(";\n");
    }
    QasmDocument { text }
}

/// Serializes an adder with its layout metadata. Output is byte-for-byte
/// deterministic.
pub fn export_qasm(built: &BuiltAdder) -> QasmDocument {
    let meta = Metadata {
        variant: Some(built.variant),
        label: built.circuit.label().to_string(),
        layout: built.layout.clone(),
    };
    write_program(&built.circuit, Some(&meta))
}

/// Serializes a bare circuit without metadata.
pub fn export_circuit(circuit: &Circuit) -> QasmDocument {
    write_program(circuit, None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedQasm {
    pub circuit: Circuit,
    pub layout: Option<RegisterLayout>,
    pub variant: Option<AdderVariant>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
    metadata: Option<String>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            col: 1,
            metadata: None,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, col: usize, msg: impl Into<String>) -> QasmError {
        QasmError::SyntaxError {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn tokenize(mut self) -> Result<(Vec<Token>, Option<String>), QasmError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            let (line, col) = (self.line, self.col);
            if c.is_whitespace() {
                self.bump();
            } else if c == '/' && self.peek2() == Some('/') {
                let start = self.pos + 2;
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
                let body = self.src[start..self.pos].trim();
                if self.metadata.is_none() {
                    if let Some(json) = body.strip_prefix(METADATA_PREFIX) {
                        self.metadata = Some(json.trim().to_string());
                    }
                }
            } else if c == '/' && self.peek2() == Some('*') {
                self.bump();
                self.bump();
                loop {
                    match self.peek() {
                        None => return Err(self.error(line, col, "unterminated block comment")),
                        Some('*') if self.peek2() == Some('/') => {
                            self.bump();
                            self.bump();
                            break;
                        }
                        Some(_) => {
                            self.bump();
                        }
                    }
                }
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                out.push(Token {
                    tok: Tok::Ident(self.src[start..self.pos].to_string()),
                    line,
                    col,
                });
            } else if c.is_ascii_digit() {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                    self.bump();
                }
                out.push(Token {
                    tok: Tok::Number(self.src[start..self.pos].to_string()),
                    line,
                    col,
                });
            } else if c == '"' {
                self.bump();
                let start = self.pos;
                while self.peek().is_some_and(|c| c != '"' && c != '\n') {
                    self.bump();
                }
                if self.peek() != Some('"') {
                    return Err(self.error(line, col, "unterminated string"));
                }
                let s = self.src[start..self.pos].to_string();
                self.bump();
                out.push(Token {
                    tok: Tok::Str(s),
                    line,
                    col,
                });
            } else if ";[],(){}=+-*<>!&|^~@:".contains(c) {
                self.bump();
                out.push(Token {
                    tok: Tok::Punct(c),
                    line,
                    col,
                });
            } else {
                return Err(self.error(line, col, format!("unexpected character {c:?}")));
            }
        }
        Ok((out, self.metadata))
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
    register: Option<(String, usize)>,
    gates: Vec<Gate>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map_or(self.eof, |t| (t.line, t.col))
    }

    fn syntax(&self, msg: impl Into<String>) -> QasmError {
        let (line, col) = self.here();
        QasmError::SyntaxError {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_punct(&mut self, p: char) -> Result<(), QasmError> {
        match self.peek() {
            Some(Token { tok: Tok::Punct(c), .. }) if *c == p => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.syntax(format!("expected `{p}`"))),
        }
    }

    fn expect_ident(&mut self) -> Result<(String, usize, usize), QasmError> {
        match self.peek().cloned() {
            Some(Token {
                tok: Tok::Ident(s),
                line,
                col,
            }) => {
                self.pos += 1;
                Ok((s, line, col))
            }
            _ => Err(self.syntax("expected identifier")),
        }
    }

    fn expect_index(&mut self) -> Result<usize, QasmError> {
        match self.peek().cloned() {
            Some(Token {
                tok: Tok::Number(s), ..
            }) => {
                let v = s.parse::<usize>().map_err(|_| self.syntax(format!("invalid index `{s}`")))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.syntax("expected integer")),
        }
    }

    fn program(&mut self) -> Result<(), QasmError> {
        self.header()?;
        while self.peek().is_some() {
            self.statement()?;
        }
        Ok(())
    }

    fn header(&mut self) -> Result<(), QasmError> {
        let Some(Token {
            tok: Tok::Ident(id), ..
        }) = self.peek()
        else {
            return Ok(());
        };
        if id != "OPENQASM" {
            return Ok(());
        }
        self.pos += 1;
        let (line, col) = self.here();
        match self.next() {
            Some(Token {
                tok: Tok::Number(v), ..
            }) => {
                if v != "3" && !v.starts_with("3.") {
                    return Err(QasmError::SubsetViolation {
                        line,
                        col,
                        construct: format!("OPENQASM {v}"),
                    });
                }
            }
            _ => {
                return Err(QasmError::SyntaxError {
                    line,
                    col,
                    msg: "expected version number".into(),
                })
            }
        }
        self.expect_punct(';')
    }

    fn statement(&mut self) -> Result<(), QasmError> {
        let tok = self.peek().cloned().expect("statement called at end of input");
        let (name, line, col) = match tok.tok {
            Tok::Ident(name) => (name, tok.line, tok.col),
            Tok::Punct(c) => {
                return Err(QasmError::SyntaxError {
                    line: tok.line,
                    col: tok.col,
                    msg: format!("unexpected `{c}`"),
                })
            }
            _ => {
                return Err(QasmError::SyntaxError {
                    line: tok.line,
                    col: tok.col,
                    msg: "expected statement".into(),
                })
            }
        };
        match name.as_str() {
            "include" => self.include(),
            "qubit" => self.declaration(line, col),
            "x" | "cx" | "ccx" | "reset" => self.gate(&name, line, col),
            "OPENQASM" => Err(QasmError::SyntaxError {
                line,
                col,
                msg: "version header must come first".into(),
            }),
            _ => Err(QasmError::SubsetViolation { line, col, construct: name }),
        }
    }

    fn include(&mut self) -> Result<(), QasmError> {
        self.pos += 1;
        let (line, col) = self.here();
        match self.next() {
            Some(Token {
                tok: Tok::Str(path), ..
            }) => {
                if path != "stdgates.inc" {
                    return Err(QasmError::SubsetViolation {
                        line,
                        col,
                        construct: format!("include \"{path}\""),
                    });
                }
            }
            _ => {
                return Err(QasmError::SyntaxError {
                    line,
                    col,
                    msg: "expected file name string".into(),
                })
            }
        }
        self.expect_punct(';')
    }

    fn declaration(&mut self, line: usize, col: usize) -> Result<(), QasmError> {
        self.pos += 1;
        if self.register.is_some() {
            return Err(QasmError::SubsetViolation {
                line,
                col,
                construct: "second qubit register".into(),
            });
        }
        self.expect_punct('[')?;
        let size_pos = self.here();
        let size = self.expect_index()?;
        if size > MAX_QUBITS {
            return Err(QasmError::SubsetViolation {
                line: size_pos.0,
                col: size_pos.1,
                construct: format!("qubit[{size}] (limit {MAX_QUBITS})"),
            });
        }
        self.expect_punct(']')?;
        let (name, _, _) = self.expect_ident()?;
        self.expect_punct(';')?;
        self.register = Some((name, size));
        Ok(())
    }

    fn gate(&mut self, name: &str, line: usize, col: usize) -> Result<(), QasmError> {
        self.pos += 1;
        let kind = match name {
            "x" => GateKind::X,
            "cx" => GateKind::Cnot,
            "ccx" => GateKind::Toffoli,
            _ => GateKind::Reset,
        };
        let Some((reg, width)) = self.register.clone() else {
            return Err(QasmError::SyntaxError {
                line,
                col,
                msg: format!("`{name}` before qubit declaration"),
            });
        };
        let mut operands = Vec::with_capacity(3);
        loop {
            let (ident, oline, ocol) = self.expect_ident()?;
            if ident != reg {
                return Err(QasmError::SyntaxError {
                    line: oline,
                    col: ocol,
                    msg: format!("unknown register `{ident}`"),
                });
            }
            self.expect_punct('[')?;
            let index = self.expect_index()?;
            self.expect_punct(']')?;
            if index >= width {
                return Err(QasmError::WidthMismatch {
                    line: oline,
                    col: ocol,
                    index,
                    width,
                });
            }
            if operands.contains(&index) {
                return Err(QasmError::DuplicateOperand {
                    line,
                    col,
                    wire: index,
                });
            }
            operands.push(index);
            if operands.len() > 3 {
                return Err(self.syntax(format!("too many operands for `{name}`")));
            }
            match self.peek() {
                Some(Token { tok: Tok::Punct(','), .. }) => self.pos += 1,
                _ => break,
            }
        }
        if !matches!(self.peek(), Some(Token { tok: Tok::Punct(';'), .. })) {
            return Err(self.syntax("expected `,` or `;`"));
        }
        self.pos += 1;
        if operands.len() != kind.arity() {
            return Err(QasmError::SyntaxError {
                line,
                col,
                msg: format!("`{name}` takes {} operand(s), got {}", kind.arity(), operands.len()),
            });
        }
        let gate = Gate::new(kind, &operands).map_err(|e| QasmError::SyntaxError {
            line,
            col,
            msg: e.to_string(),
        })?;
        self.gates.push(gate);
        Ok(())
    }
}

fn layout_fits(layout: &RegisterLayout, width: usize) -> bool {
    layout.width() == width
        && [
            &layout.a_wires,
            &layout.b_wires,
            &layout.sum_wires,
            &layout.mod_wires,
            &layout.ancilla_wires,
        ]
        .iter()
        .all(|ws| ws.iter().all(|&w| w < width))
}

/// Parses a program in the supported subset.
pub fn parse_qasm(text: &str) -> Result<ParsedQasm, QasmError> {
    let lexer = Lexer::new(text);
    let (eof_line, eof_col) = {
        let line = text.matches('\n').count() + 1;
        let col = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    };
    let (toks, metadata) = lexer.tokenize()?;
    let mut parser = Parser {
        toks,
        pos: 0,
        eof: (eof_line, eof_col),
        register: None,
        gates: Vec::new(),
    };
    parser.program()?;
    let Some((_, width)) = parser.register else {
        return Err(QasmError::SyntaxError {
            line: eof_line,
            col: eof_col,
            msg: "missing qubit declaration".into(),
        });
    };

    let meta = metadata
        .and_then(|json| serde_json::from_str::<Metadata>(&json).ok())
        .filter(|m| layout_fits(&m.layout, width));
    let label = meta.as_ref().map_or_else(|| "qasm".to_string(), |m| m.label.clone());
    let mut circuit = Circuit::new(width, label);
    circuit.extend(parser.gates).map_err(|e| QasmError::SyntaxError {
        line: eof_line,
        col: eof_col,
        msg: e.to_string(),
    })?;
    Ok(ParsedQasm {
        circuit,
        variant: meta.as_ref().and_then(|m| m.variant),
        layout: meta.map(|m| m.layout),
    })
}

/// Like [`parse_qasm`] but accepts arbitrary bytes; invalid UTF-8 is reported
/// at the position of the first bad byte.
pub fn parse_qasm_bytes(bytes: &[u8]) -> Result<ParsedQasm, QasmError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_qasm(text),
        Err(e) => {
            let valid = &bytes[..e.valid_up_to()];
            let valid = std::str::from_utf8(valid).unwrap_or_default();
            let line = valid.matches('\n').count() + 1;
            let col = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            Err(QasmError::SyntaxError {
                line,
                col,
                msg: "invalid UTF-8".into(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_qma;

    #[test]
    fn single_x_export() {
        let mut c = Circuit::new(1, "one");
        c.append(Gate::x(0)).unwrap();
        let doc = export_circuit(&c);
        assert_eq!(doc.text.lines().filter(|l| l.starts_with("x ")).count(), 1);
        assert_eq!(
            doc.text,
            "OPENQASM 3.0;\ninclude \"stdgates.inc\";\nqubit[1] q;\nx q[0];\n"
        );
        let back = parse_qasm(&doc.text).unwrap();
        assert_eq!(back.circuit.gates(), c.gates());
        assert!(back.layout.is_none());
    }

    #[test]
    fn qma3_has_five_resets() {
        let doc = export_qasm(&build_qma(AdderVariant::Qma3, 4).unwrap());
        assert_eq!(doc.text.lines().filter(|l| l.starts_with("reset ")).count(), 5);
    }

    #[test]
    fn export_is_deterministic() {
        let built = build_qma(AdderVariant::Qma4, 3).unwrap();
        assert_eq!(export_qasm(&built).text, export_qasm(&built.clone()).text);
    }

    #[test]
    fn round_trip_restores_layout() {
        let built = build_qma(AdderVariant::Qma2, 4).unwrap();
        let parsed = parse_qasm(&export_qasm(&built).text).unwrap();
        assert_eq!(parsed.circuit, built.circuit);
        assert_eq!(parsed.layout.as_ref(), Some(&built.layout));
        assert_eq!(parsed.variant, Some(AdderVariant::Qma2));
    }

    #[test]
    fn h_gate_is_a_subset_violation() {
        let err = parse_qasm("OPENQASM 3.0;\nqubit[2] q;\nh q[0];\n").unwrap_err();
        assert_eq!(
            err,
            QasmError::SubsetViolation {
                line: 3,
                col: 1,
                construct: "h".into()
            }
        );
    }

    #[test]
    fn duplicate_cx_operand() {
        let err = parse_qasm("OPENQASM 3.0;\nqubit[2] q;\ncx q[1], q[1];\n").unwrap_err();
        assert!(matches!(err, QasmError::DuplicateOperand { line: 3, wire: 1, .. }), "{err:?}");
    }

    #[test]
    fn operand_beyond_register() {
        let err = parse_qasm("qubit[2] q;\nccx q[0], q[1], q[2];").unwrap_err();
        assert_eq!(
            err,
            QasmError::WidthMismatch {
                line: 2,
                col: 17,
                index: 2,
                width: 2
            }
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_qasm("qubit[2] q;\ncx q[0] q[1];").unwrap_err();
        assert!(matches!(err, QasmError::SyntaxError { line: 2, col: 9, .. }), "{err:?}");
        let err = parse_qasm("qubit[2] q;\nx q[0]").unwrap_err();
        assert!(matches!(err, QasmError::SyntaxError { line: 2, .. }), "{err:?}");
        assert!(matches!(parse_qasm("x q[0];"), Err(QasmError::SyntaxError { .. })));
        assert!(matches!(parse_qasm(""), Err(QasmError::SyntaxError { .. })));
        assert!(matches!(
            parse_qasm("OPENQASM 2.0;\nqubit[1] q;"),
            Err(QasmError::SubsetViolation { .. })
        ));
        assert!(matches!(
            parse_qasm("qubit[1] q; qubit[1] r;"),
            Err(QasmError::SubsetViolation { .. })
        ));
        assert!(matches!(
            parse_qasm("qubit[99999999999999999999999] q;"),
            Err(QasmError::SyntaxError { .. })
        ));
    }

    #[test]
    fn comments_and_malformed_metadata() {
        let text = "OPENQASM 3;\n// layout: {not json}\n/* block\ncomment */ qubit[3] q;\nreset q[2]; // trailing\n";
        let parsed = parse_qasm(text).unwrap();
        assert_eq!(parsed.circuit.gates(), &[Gate::reset(2)]);
        assert!(parsed.layout.is_none());
    }

    #[test]
    fn invalid_utf8_reports_position() {
        let err = parse_qasm_bytes(b"qubit[1] q;\nx \xff").unwrap_err();
        assert_eq!(
            err,
            QasmError::SyntaxError {
                line: 2,
                col: 3,
                msg: "invalid UTF-8".into()
            }
        );
    }
}
