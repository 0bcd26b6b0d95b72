/**
 * Grammar equivalence against the desktop client's parser: the fixture file
 * is generated from it, and every expression must produce an identical AST,
 * canonical rendering, and atom count — plus matching error positions.
 */

import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import { describe, expect, it } from "vitest";

import { ParseError, countAtoms, parse, render } from "../src/parser.js";

interface ValidCase {
  expression: string;
  ast: unknown;
  rendered: string;
  atoms: number;
}

interface InvalidCase {
  expression: string;
  position: number | null;
}

const corpus = JSON.parse(
  readFileSync(resolve(process.cwd(), "fixtures/expressions.json"), "utf-8"),
) as { valid: ValidCase[]; invalid: InvalidCase[] };

describe("parser corpus equivalence", () => {
  it("covers the 20-expression corpus", () => {
    expect(corpus.valid.length).toBe(20);
  });

  for (const item of corpus.valid) {
    it(`parses ${JSON.stringify(item.expression)} identically`, () => {
      const ast = parse(item.expression);
      expect(ast).toEqual(item.ast);
      expect(render(ast)).toBe(item.rendered);
      expect(countAtoms(ast)).toBe(item.atoms);
    });
  }

  for (const item of corpus.invalid) {
    it(`rejects ${JSON.stringify(item.expression)} at position ${item.position}`, () => {
      try {
        parse(item.expression);
        expect.unreachable("expected a parse error");
      } catch (error) {
        expect(error).toBeInstanceOf(ParseError);
        expect((error as ParseError).position).toBe(item.position);
      }
    });
  }
});

describe("parser behavior", () => {
  it("normalizes atoms", () => {
    expect(parse("  COVID-19 ")).toEqual({ op: "atom", keyword: "covid-19" });
    expect(parse('"Facial  Emotion"')).toEqual({ op: "atom", keyword: "facial emotion" });
  });

  it("applies NOT > AND > OR precedence", () => {
    expect(parse("a AND b OR c")).toEqual({
      op: "or",
      lhs: { op: "and", lhs: { op: "atom", keyword: "a" }, rhs: { op: "atom", keyword: "b" } },
      rhs: { op: "atom", keyword: "c" },
    });
  });

  it("round-trips render(parse(x))", () => {
    for (const item of corpus.valid) {
      const ast = parse(item.expression);
      expect(parse(render(ast))).toEqual(ast);
    }
  });
});
