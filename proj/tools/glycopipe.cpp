// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#include "glycopipe/cli.hpp"

int main(int argc, char** argv) { return glycopipe::cli_main(argc, argv); }
