// Copyright (c) 2026 stereotrack contributors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

int main() {
  std::cout << "stereotrack (work in progress)\n";
  return 0;
}
