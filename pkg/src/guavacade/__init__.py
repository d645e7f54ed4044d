"""Confidence-gated cascade ensembles for disease classification on
CNN-derived feature vectors.

A base learner (logistic regression softmax head, Gaussian NB, KNN, CART,
random forest, or AdaBoost-SAMME) answers every query it is confident about;
low-confidence queries fall through to a histogram gradient-boosted tree
ensemble. Includes FVEC/FMAP feature file formats, stratified splitting,
random undersampling, evaluation reports, a CLI, and a prediction service.
"""

from .cascade import (
    CascadeModel,
    RoutedPrediction,
    cascade_predict,
    cascade_predict_batch,
    confidence,
    empirical_risk,
    fit_cascade,
)
from .classifiers import (
    compute_sample_weights,
    fit_adaboost_samme,
    fit_classifier,
    fit_gaussian_nb,
    fit_knn,
    predict,
    predict_proba,
    samme_alpha,
)
from .data import (
    Dataset,
    Manifest,
    SplitResult,
    read_feature_file,
    read_fvec,
    read_manifest,
    stratified_split,
    undersample,
    write_feature_file,
    write_fvec,
    write_manifest,
)
from .errors import FileFormatError, GuavacadeError, InputError, TrainingError
from .evaluation import (
    ConfusionMatrix,
    EvalReport,
    classification_report,
    confusion_matrix,
    emit_report,
    render_confusion_matrix,
    timed,
)
from .features import (
    baseline_histogram_features,
    gap,
    gap_batch,
    preprocess_image,
    read_feature_map_file,
    read_ppm,
    resize_bilinear,
    write_feature_map_file,
    write_ppm,
)
from .gbdt import BinnedMatrix, GbdtConfig, GbdtModel, fit_gbdt, grow_tree, quantile_bin, softmax_grad_hess
from .persist import load_model, save_model
from .softmax_head import (
    AdamState,
    LinearModel,
    TrainConfig,
    adam_step,
    cross_entropy,
    head_gradient,
    linear_forward,
    one_hot,
    softmax,
    train_softmax_head,
)
from .trees import CartModel, ForestModel, fit_cart, fit_random_forest

__version__ = "0.1.0"
