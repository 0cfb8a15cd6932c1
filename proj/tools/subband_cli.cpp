// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>

int main() {
  std::puts("subband cli: not wired up yet");
  return 0;
}
