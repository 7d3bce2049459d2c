#pragma once

// Small hand-built graphs shared by the tests.

#include "provex/graph.hpp"

namespace fixtures {

using provex::GraphBuilder;
using provex::ProvGraph;

// P writes F, P forks C, C execs F, P reads a dll; plus one untouched file.
// Node order: P, F, C, D, X.
inline ProvGraph dropper() {
  GraphBuilder b("dropper");
  const auto p = b.process("P", "C:/Users/Public/loader.exe");
  const auto f = b.file("F", "C:/Temp/payload.exe");
  const auto c = b.process("C", "C:/Temp/payload.exe");
  const auto d = b.file("D", "C:/Windows/System32/kernel32.dll");
  b.file("X", "C:/Temp/unused.txt");
  b.write(p, f).fork(p, c).exec(c, f).read(p, d);
  b.label("malicious");
  return b.build();
}

// Parent and child both exec the same image.
inline ProvGraph clone() {
  GraphBuilder b("clone");
  const auto p = b.process("P");
  const auto f = b.file("F");
  const auto c = b.process("C");
  b.exec(p, f).fork(p, c).exec(c, f);
  return b.build();
}

// Parent reads the file its child later executes.
inline ProvGraph probe() {
  GraphBuilder b("probe");
  const auto p = b.process("P");
  const auto f = b.file("F");
  const auto c = b.process("C");
  b.read(p, f).fork(p, c).exec(c, f);
  return b.build();
}

// One process reading many files.
inline ProvGraph flower(int reads = 6) {
  GraphBuilder b("flower");
  const auto p = b.process("P");
  for (int i = 0; i < reads; ++i) b.read(p, b.file("f" + std::to_string(i)));
  b.label("benign");
  return b.build();
}

// Three processes, one fork per pair: A->B, B->C, A->C.
inline ProvGraph k3() {
  GraphBuilder b("k3");
  const auto a = b.process("A");
  const auto x = b.process("B");
  const auto c = b.process("C");
  b.fork(a, x).fork(x, c).fork(a, c);
  return b.build();
}

}  // namespace fixtures
