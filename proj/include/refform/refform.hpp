#pragma once

#include "refform/boosted_trees.hpp"
#include "refform/classifiers/crf.hpp"
#include "refform/classifiers/decision_tree.hpp"
#include "refform/classifiers/knn.hpp"
#include "refform/classifiers/maxent.hpp"
#include "refform/classifiers/mlp.hpp"
#include "refform/compare.hpp"
#include "refform/corpus.hpp"
#include "refform/error.hpp"
#include "refform/evaluation.hpp"
#include "refform/features.hpp"
#include "refform/importance.hpp"
#include "refform/io.hpp"
#include "refform/model.hpp"
#include "refform/prediction.hpp"
#include "refform/prediction_file.hpp"
#include "refform/random.hpp"
#include "refform/stat_analysis.hpp"
#include "refform/synth.hpp"
