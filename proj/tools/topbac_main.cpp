// Copyright (c) 2026 topbac authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>

int main() {
    std::puts("topbac " TOPBAC_VERSION);
    return 0;
}
