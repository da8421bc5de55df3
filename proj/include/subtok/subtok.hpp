#pragma once

// Umbrella header.

#include "subtok/bench.hpp"
#include "subtok/bpe_model.hpp"
#include "subtok/byte_alphabet.hpp"
#include "subtok/char_model.hpp"
#include "subtok/common.hpp"
#include "subtok/merge_table.hpp"
#include "subtok/model.hpp"
#include "subtok/normalizer.hpp"
#include "subtok/post_process.hpp"
#include "subtok/pre_tokenizer.hpp"
#include "subtok/registry.hpp"
#include "subtok/sha256.hpp"
#include "subtok/tokenizer.hpp"
#include "subtok/train_pipeline.hpp"
#include "subtok/trainers.hpp"
#include "subtok/unicode.hpp"
#include "subtok/unigram_model.hpp"
#include "subtok/unigram_trainer.hpp"
#include "subtok/vocab.hpp"
#include "subtok/word_counts.hpp"
