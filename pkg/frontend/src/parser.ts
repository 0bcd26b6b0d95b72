/**
 * Boolean keyword query grammar, byte-for-byte compatible with the desktop
 * client's parser (a shared expression corpus pins the equivalence):
 *
 *   expr     := or_expr
 *   or_expr  := and_expr ( OR and_expr )*
 *   and_expr := not_expr ( AND not_expr )*
 *   not_expr := NOT not_expr | atom
 *   atom     := KEYWORD | "quoted keyword" | ( expr )
 *
 * Operators are case-insensitive and reserved; precedence NOT > AND > OR,
 * binary operators associate left. Atoms come out normalized (NFC, lower
 * case, whitespace collapsed). Parse errors carry a character position for
 * inline feedback.
 */

export type AstNode =
  | { op: "atom"; keyword: string }
  | { op: "not"; child: AstNode }
  | { op: "and"; lhs: AstNode; rhs: AstNode }
  | { op: "or"; lhs: AstNode; rhs: AstNode };

export const MAX_ATOMS = 8;

export class ParseError extends Error {
  constructor(message: string, public position: number | null) {
    super(position === null ? message : `${message} at position ${position}`);
    this.name = "ParseError";
  }
}

interface Token {
  kind: "op" | "atom" | "lparen" | "rparen";
  text: string;
  pos: number;
}

const RESERVED = new Set(["or", "and", "not"]);

export function normalizeKeyword(raw: string): string {
  const norm = raw.normalize("NFC").toLowerCase().split(/\s+/).filter(Boolean).join(" ");
  return norm;
}

function tokenize(expr: string): Token[] {
  const tokens: Token[] = [];
  let i = 0;
  while (i < expr.length) {
    const ch = expr[i]!;
    if (/\s/.test(ch)) {
      i += 1;
    } else if (ch === "(") {
      tokens.push({ kind: "lparen", text: "(", pos: i });
      i += 1;
    } else if (ch === ")") {
      tokens.push({ kind: "rparen", text: ")", pos: i });
      i += 1;
    } else if (ch === '"') {
      const j = expr.indexOf('"', i + 1);
      if (j < 0) throw new ParseError("unterminated quote", i);
      tokens.push({ kind: "atom", text: expr.slice(i + 1, j), pos: i });
      i = j + 1;
    } else {
      let j = i;
      while (j < expr.length && !/\s/.test(expr[j]!) && !'()"'.includes(expr[j]!)) j += 1;
      const word = expr.slice(i, j);
      if (RESERVED.has(word.toLowerCase())) {
        tokens.push({ kind: "op", text: word.toLowerCase(), pos: i });
      } else {
        tokens.push({ kind: "atom", text: word, pos: i });
      }
      i = j;
    }
  }
  return tokens;
}

class Parser {
  private i = 0;

  constructor(private tokens: Token[], private end: number) {}

  private peek(): Token | undefined {
    return this.tokens[this.i];
  }

  private next(): Token {
    const tok = this.peek();
    if (tok === undefined) throw new ParseError("unexpected end of expression", this.end);
    this.i += 1;
    return tok;
  }

  parse(): AstNode {
    const node = this.orExpr();
    const tok = this.peek();
    if (tok !== undefined) throw new ParseError(`unexpected '${tok.text}'`, tok.pos);
    return node;
  }

  private orExpr(): AstNode {
    let node = this.andExpr();
    for (let tok = this.peek(); tok && tok.kind === "op" && tok.text === "or"; tok = this.peek()) {
      this.next();
      node = { op: "or", lhs: node, rhs: this.andExpr() };
    }
    return node;
  }

  private andExpr(): AstNode {
    let node = this.notExpr();
    for (let tok = this.peek(); tok && tok.kind === "op" && tok.text === "and"; tok = this.peek()) {
      this.next();
      node = { op: "and", lhs: node, rhs: this.notExpr() };
    }
    return node;
  }

  private notExpr(): AstNode {
    const tok = this.peek();
    if (tok !== undefined && tok.kind === "op" && tok.text === "not") {
      this.next();
      return { op: "not", child: this.notExpr() };
    }
    return this.atom();
  }

  private atom(): AstNode {
    const tok = this.next();
    if (tok.kind === "lparen") {
      const node = this.orExpr();
      const closing = this.peek();
      if (closing === undefined || closing.kind !== "rparen") {
        throw new ParseError("expected ')'", closing ? closing.pos : this.end);
      }
      this.next();
      return node;
    }
    if (tok.kind === "atom") {
      const keyword = normalizeKeyword(tok.text);
      if (!keyword) throw new ParseError("empty keyword", tok.pos);
      return { op: "atom", keyword };
    }
    throw new ParseError(`unexpected '${tok.text}'`, tok.pos);
  }
}

export function countAtoms(node: AstNode): number {
  switch (node.op) {
    case "atom":
      return 1;
    case "not":
      return countAtoms(node.child);
    default:
      return countAtoms(node.lhs) + countAtoms(node.rhs);
  }
}

export function parse(expr: string): AstNode {
  const tokens = tokenize(expr);
  if (tokens.length === 0) throw new ParseError("empty expression", 0);
  const node = new Parser(tokens, expr.length).parse();
  const atoms = countAtoms(node);
  if (atoms > MAX_ATOMS) {
    throw new ParseError(`query has ${atoms} atoms; the limit is ${MAX_ATOMS}`, null);
  }
  return node;
}

export function render(node: AstNode): string {
  const fmt = (n: AstNode, parentPrec: number): string => {
    if (n.op === "atom") {
      const needsQuote = /\s/.test(n.keyword) || RESERVED.has(n.keyword.toLowerCase());
      return needsQuote ? `"${n.keyword}"` : n.keyword;
    }
    if (n.op === "not") return `NOT ${fmt(n.child, 3)}`;
    const prec = n.op === "and" ? 2 : 1;
    const text = `${fmt(n.lhs, prec)} ${n.op.toUpperCase()} ${fmt(n.rhs, prec + 1)}`;
    return prec < parentPrec ? `(${text})` : text;
  };
  return fmt(node, 0);
}
