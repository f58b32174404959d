#pragma once

#include "vqcm/audio_io.hpp"
#include "vqcm/covariance.hpp"
#include "vqcm/error.hpp"
#include "vqcm/evaluation.hpp"
#include "vqcm/frontend.hpp"
#include "vqcm/fusion.hpp"
#include "vqcm/manifest.hpp"
#include "vqcm/model_store.hpp"
#include "vqcm/noise.hpp"
#include "vqcm/scores.hpp"
#include "vqcm/synth.hpp"
#include "vqcm/vq.hpp"
