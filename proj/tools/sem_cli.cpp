// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "sem/cli.hpp"

int main(int argc, char** argv) { return sem::cli_main(argc, argv); }
