//! Rule registry: 30 PyTorch rules (PT-xx) and 16 TensorFlow/Keras rules (TK-xx).
//!
//! `{subject}` in a message template is replaced by the offending name or
//! expression when a finding is rendered.

use super::Category::*;
use super::Confidence::*;
use super::FrameworkTag::*;
use super::Side::{Keras as KS, Pytorch as PS, Tensorflow as TS};
use super::{RuleSpec, TF_APPLIES, TORCH_APPLIES};

macro_rules! rule {
    ($id:literal, $name:literal, $tag:ident, $cat:ident, $conf:ident, $on:literal,
     [$($p:literal),+], [$($side:ident),+], $desc:literal, $trigger:literal, $msg:literal) => {
        RuleSpec {
            id: $id,
            name: $name,
            tag: $tag,
            category: $cat,
            confidence: $conf,
            default_enabled: $on,
            applies_when: if $id.as_bytes()[0] == b'P' { TORCH_APPLIES } else { TF_APPLIES },
            sides: &[$($side),+],
            practice_ids: &[$($p),+],
            description: $desc,
            trigger: $trigger,
            message_template: $msg,
        }
    };
}

pub static RULES: &[RuleSpec] = &[
    rule!("PT-01", "Unreleased GPU Memory (growing cache)", G, ResourceManagement, Low, true,
        ["P07", "P18"], [PS],
        "A hand-rolled cache of tensors keeps growing across iterations or forward calls and is never cleared, so the GPU memory it holds is never returned.",
        "Assignment of a call result into a subscript or attribute whose name contains `cache`, inside a loop or a module's forward method, with no clearing call on that name anywhere in the file.",
        "`{subject}` grows a tensor cache that is never cleared"),
    rule!("PT-02", "Graph Retention After Backward Pass", P, GraphAndGradient, High, true,
        ["P21"], [PS],
        "`backward(retain_graph=True)` keeps the autograd graph alive after the backward pass although no further backward pass uses it.",
        "A `backward` call with `retain_graph=True` that is not followed by another `backward` call later in the same function.",
        "`retain_graph=True` keeps the graph of `{subject}` alive but no later backward call uses it"),
    rule!("PT-03", "Unbounded Loop", G, LoopLifecycle, High, true,
        ["P26"], [PS],
        "A loop over an endlessly repeating iterator never ends on its own, so everything allocated per iteration keeps piling up.",
        "A for-loop iterating over a call that qualifies to `itertools.cycle`.",
        "loop over `{subject}` never terminates on its own"),
    rule!("PT-04", "Accumulating Gradients in Loop", G, GraphAndGradient, Medium, true,
        ["P29"], [PS],
        "Gradients are computed on every iteration of a training loop without being reset, so they accumulate across iterations.",
        "A training loop whose body contains a backward call but no `zero_grad` call and no call to a gradient-zeroing helper.",
        "training loop calls `{subject}` without resetting gradients"),
    rule!("PT-05", "Unnecessary Gradient Tracking", G, GraphAndGradient, Medium, true,
        ["P01", "P24"], [PS],
        "A model is run for inference with gradient tracking still enabled, which records a graph and keeps activations for no purpose. This also covers gradient tracking on a pre-trained model at inference time.",
        "Inside an inference function, a call on a model-like receiver outside any `no_grad`/`inference_mode` region, in a function that never sets `requires_grad = False`.",
        "`{subject}` runs with gradient tracking enabled during inference"),
    rule!("PT-06", "Release Memory Failure", G, ResourceManagement, Low, true,
        ["P04", "P07"], [PS],
        "Inference outputs are collected across a loop while still attached to the device and the graph, so memory is not released between batches.",
        "A loop inside an inference function appending a raw call result to a collection without an interposed `detach`, `cpu` or `item` call.",
        "`{subject}` keeps raw model outputs alive across the inference loop"),
    rule!("PT-07", "Unreleased Hook Memory", G, ResourceManagement, High, true,
        ["P02"], [PS],
        "A registered hook is never removed, so the hook and everything it references stay alive with the module.",
        "A call to `register_forward_hook`, `register_backward_hook` or `register_hook` whose handle is discarded, or stored in a name on which `.remove()` is never called.",
        "hook registered by `{subject}` is never removed"),
    rule!("PT-08", "Redundant DataLoader Instantiation", P, TrainingPipeline, High, true,
        ["P03"], [PS],
        "A DataLoader is rebuilt repeatedly, or configured with persistent workers that do not exist, wasting worker processes and memory.",
        "A DataLoader constructor call inside a loop, or one combining `persistent_workers=True` with `num_workers=0`.",
        "`{subject}` creates a DataLoader redundantly"),
    rule!("PT-09", "Unreleased Tensor/Model References", G, ResourceManagement, Medium, true,
        ["P04"], [PS],
        "A loss or other graph-carrying tensor is accumulated across training iterations without being detached, which keeps each iteration's graph alive.",
        "Inside a training loop, accumulating assignment or append of a name on which `backward` is called in the same loop, without `detach()` or `item()`.",
        "`{subject}` accumulates a tensor that still carries its graph"),
    rule!("PT-10", "Zippered or Cycled DataLoader", P, TrainingPipeline, High, true,
        ["P05"], [PS],
        "DataLoaders are zipped together or cycled, which multiplies live iterators and their prefetched batches.",
        "A for-loop iterating over `zip(...)` or `cycle(...)` where an argument's name contains `loader`.",
        "loop zips or cycles DataLoader `{subject}`"),
    rule!("PT-11", "Tensor Over-Concatenation", G, ResourceManagement, High, true,
        ["P06"], [PS],
        "A tensor is grown by concatenation on every loop iteration, allocating an ever larger copy each time.",
        "A `torch.cat` or `torch.stack` call inside a loop whose result is assigned back to a variable that also appears among its arguments.",
        "`{subject}` is regrown by concatenation on every iteration"),
    rule!("PT-12", "Unreleased Shell References", G, ResourceManagement, Low, true,
        ["P08"], [PS],
        "A tensor or model bound at notebook top level stays referenced by the interactive shell long after it is needed.",
        "A top-level notebook assignment binding a torch-producing call whose name is never deleted (`del` or `%xdel`) nor reassigned in a later cell.",
        "notebook variable `{subject}` holds a tensor or model that is never released"),
    rule!("PT-13", "Improper Tensor Retention", P, ResourceManagement, Medium, true,
        ["P09", "P17"], [PS],
        "A custom autograd forward stashes input-derived tensors on `ctx` attributes or in external maps instead of saving them for backward.",
        "Inside an autograd forward, assignment of an argument-derived expression to `ctx.<attr>` or into an external map.",
        "`{subject}` stores a tensor outside `ctx.save_for_backward`"),
    rule!("PT-14", "Dead Code", G, ResourceManagement, High, true,
        ["P10"], [PS],
        "Anomaly detection left enabled after debugging records extra state for every autograd operation.",
        "A call to `torch.autograd.detect_anomaly` or `torch.autograd.set_detect_anomaly` with a truthy first argument, at module top level or in a training function.",
        "`{subject}` leaves anomaly detection enabled"),
    rule!("PT-15", "Unnecessary Dim Retention", G, ResourceManagement, Low, true,
        ["P11"], [PS],
        "A reduction keeps a dimension that is squeezed away immediately afterwards.",
        "A sum/mean/max/min/prod reduction with `keepdim=True` whose result is squeezed within the next two statements.",
        "`{subject}` keeps a dimension that is squeezed right after"),
    rule!("PT-16", "Circular Buffer References", G, ResourceManagement, Low, true,
        ["P12"], [PS],
        "An object stores a strong reference to itself inside one of its members, forming a cycle that delays collection.",
        "An assignment `self.<a>.<b> = self` in a class method.",
        "`{subject}` creates a reference cycle back to `self`"),
    rule!("PT-17", "Accumulated Object References", P, ResourceManagement, High, true,
        ["P13"], [PS],
        "A custom autograd Function uses instance methods or `self` state, so each call accumulates objects instead of using the static `ctx` protocol.",
        "An autograd Function subclass whose forward/backward lack `@staticmethod`, or any `self.save_for_backward` call.",
        "`{subject}` should be a static autograd method using `ctx`"),
    rule!("PT-18", "Inefficient GPU Matrix Ops", G, ResourceManagement, Low, true,
        ["P14"], [PS],
        "Matrix products are accumulated on the GPU inside a loop, holding large intermediates in device memory.",
        "A `torch.mm`/`torch.matmul`/`torch.bmm` call inside a loop whose result is accumulated into a loop-carried variable.",
        "`{subject}` accumulates matrix products on the device inside a loop"),
    rule!("PT-19", "Lingering References", G, ResourceManagement, Medium, true,
        ["P15"], [PS],
        "Live tensors are pushed into a replay memory or buffer, pinning their storage and graph for the buffer's lifetime.",
        "Append/add of a tensor-typed expression into a receiver whose name contains memory, buffer or replay, without `cpu()`, `numpy()` or `detach()`.",
        "`{subject}` stores live tensors in a long-lived buffer"),
    rule!("PT-20", "Forward-Pass Tensor Stored as Class Attribute", G, ResourceManagement, High, true,
        ["P16"], [PS],
        "The forward method keeps an intermediate tensor on `self`, so the last batch's activations and graph outlive the call.",
        "Inside a module's forward method, `self.<name> = <expr>` where the expression mentions a forward parameter and the name is not a registered buffer or parameter.",
        "`{subject}` keeps a forward-pass tensor on the module"),
    rule!("PT-21", "Missing Gradient Tensors", P, GraphAndGradient, Medium, true,
        ["P17"], [PS],
        "An autograd backward reads tensors from `ctx` attributes that forward never saved through `save_for_backward`.",
        "An autograd backward reading `ctx.<attr>` (other than `saved_tensors`/`needs_input_grad`) that the paired forward never saved via `save_for_backward`.",
        "backward reads `{subject}`, which forward never saved with save_for_backward"),
    rule!("PT-22", "Oversized Batch Handling", G, TrainingPipeline, Low, false,
        ["P19"], [PS],
        "A very large literal batch size loads more data per step than the device comfortably holds.",
        "`batch_size=<integer literal>` at or above the configured threshold on a DataLoader-like constructor.",
        "batch size {subject} is at or above the configured threshold"),
    rule!("PT-23", "Uncleared Gradients", P, GraphAndGradient, High, true,
        ["P20", "P21"], [PS],
        "The graph is retained on every iteration of a loop, so graphs from earlier iterations pile up.",
        "A `backward` call with `retain_graph=True` lexically inside a loop.",
        "`{subject}` retains the graph on every loop iteration"),
    rule!("PT-24", "Nested Second Derivative Calls", P, GraphAndGradient, High, true,
        ["P22"], [PS],
        "Gradient calls are nested to obtain higher-order derivatives without building the first graph for it.",
        "A `torch.autograd.grad` call whose arguments contain another grad call, or that consumes an earlier grad result, where the inner call lacks `create_graph=True`.",
        "nested `{subject}` without create_graph=True on the inner call"),
    rule!("PT-25", "Improper Gradient Use in Normalization Layers", P, GraphAndGradient, High, true,
        ["P23"], [PS],
        "Running statistics are updated from graph-attached values, chaining every batch's graph into the buffers.",
        "Assignment to `self.running_mean`, `self.running_var` or `self.running_covar` from an expression not wrapped in `.detach()` and outside a grad-disabled region.",
        "`{subject}` is updated without detaching"),
    rule!("PT-26", "Mishandling Training Gradient", G, GraphAndGradient, Medium, true,
        ["P24"], [PS],
        "A model is switched to eval mode and then called with gradient tracking still on, as if it were training.",
        "`.eval()` on a receiver followed later in the same function by a call of that receiver outside a grad-disabled region.",
        "`{subject}` is called after eval() with gradients still tracked"),
    rule!("PT-27", "Using del Without Freeing Memory", G, ResourceManagement, Low, true,
        ["P25"], [PS],
        "A tensor or model is deleted but the cached GPU memory is never released afterwards.",
        "`del` of a name bound to a torch-rooted call, with no `torch.cuda.empty_cache()` call later in the same scope.",
        "`del {subject}` is not followed by torch.cuda.empty_cache()"),
    rule!("PT-28", "Repeated Group Creation Inside Loop", G, LoopLifecycle, High, true,
        ["P27"], [PS],
        "A distributed process group is created on every iteration instead of once.",
        "A call to `torch.distributed.new_group` or `torch.distributed.init_process_group` inside a loop.",
        "`{subject}` creates a process group on every iteration"),
    rule!("PT-29", "Encoder-Decoder Inside Training Loop", G, TrainingPipeline, High, true,
        ["P28"], [PS],
        "Model components are constructed anew on every training iteration.",
        "Inside a training loop, a constructor call of an in-file module subclass or a `torch.nn` class assigned to a variable.",
        "`{subject}` constructs a module on every training iteration"),
    rule!("PT-30", "Tracing Inside Loop Without Cleanup", G, ResourceManagement, Medium, true,
        ["P30"], [PS],
        "TorchScript tracing or scripting is repeated in a loop, and every traced artifact stays resident.",
        "A call to `torch.jit.trace` or `torch.jit.script` inside a loop.",
        "`{subject}` traces inside a loop"),
    rule!("TK-01", "Unclosed Resource Leak", TK, ResourceManagement, Medium, true,
        ["T01", "T02", "T03", "T04", "K01"], [TS, KS],
        "Models, layers, variables or files are created inside a loop and never closed or cleared within it.",
        "Inside a loop, model construction/compile/fit, layer construction, variable creation or `open()` with no `clear_session`, `close`, with-block or `del` for the created name in the same loop body.",
        "`{subject}` is created inside the loop and never released there"),
    rule!("TK-02", "Primitive API Leakage", TK, FrameworkAbstraction, Medium, true,
        ["T05"], [TS],
        "A raw TensorFlow operation is used directly as a layer of a Keras model instead of being wrapped in a Layer.",
        "A call to a `tensorflow.<op>` primitive appearing as a layer in a functional-model expression or a Sequential list, outside a Layer subclass.",
        "raw TensorFlow op `{subject}` used directly inside a Keras model"),
    rule!("TK-03", "Using Lambda Layers to Perform Complex or Repeated Operations", TK, FrameworkAbstraction, Medium, true,
        ["T06"], [TS, KS],
        "A Lambda layer wraps a complex function or is built repeatedly, and retains intermediate tensors and graph references.",
        "A `Lambda(...)` whose callable is a named function containing a loop or at least three calls, or the same Lambda constructed inside a loop.",
        "Lambda layer `{subject}` wraps complex or repeated work"),
    rule!("TK-04", "Session Pile-Up", T, ResourceManagement, High, true,
        ["T07"], [TS],
        "Models are rebuilt in a loop without clearing the session, so old graphs and variables accumulate.",
        "A model-building call (in-file model class, Sequential, Model or load_model) inside a loop with no `clear_session()` in the loop body.",
        "`{subject}` builds a model in a loop without clear_session()"),
    rule!("TK-05", "Dataset-Iterator Retention", G, TrainingPipeline, High, true,
        ["T08"], [TS],
        "A Dataset is passed to `predict` inside a loop, creating a new iterator each time.",
        "A `.predict(<name>)` call inside a loop where the name is bound from a `tensorflow.data` Dataset construction or transformation.",
        "`predict({subject})` creates a new dataset iterator on every iteration"),
    rule!("TK-06", "Unreleased Tensor Reference", G, ResourceManagement, Low, true,
        ["T09"], [TS],
        "A loop variable is rebound to new tensors without the previous tensor being disposed of.",
        "Inside a loop, reassignment of a variable from a tensor-producing call while its prior value receives no dispose or delete in between.",
        "`{subject}` is rebound to a new tensor without releasing the previous one"),
    rule!("TK-07", "Unclosed-Session Leak", T, ResourceManagement, High, true,
        ["T10", "T11"], [TS],
        "A session is opened and never closed, keeping its graph resources alive.",
        "A `Session`/`InteractiveSession` result bound to a name with no `.close()` on it in the file and not used as a with-context.",
        "session `{subject}` is never closed"),
    rule!("TK-08", "Image Buffer Accumulation", G, ResourceManagement, Medium, true,
        ["T04"], [TS],
        "An augmentation routine keeps appending images to an outer collection that is never cleared.",
        "A function whose name contains `augment` appending call results inside a loop to a collection defined outside that loop, with no clearing of it in the function.",
        "`{subject}` accumulates augmented images without clearing"),
    rule!("TK-09", "Unbounded Graph Expansion", T, GraphManagement, High, true,
        ["T12"], [TS],
        "Graph nodes are added on every loop iteration in graph mode, so the default graph grows without bound.",
        "A graph-building call (`tf.constant`, `tf.Variable`, arithmetic ops, `get_variable`) inside a loop in a graph-mode file without per-iteration graph scoping.",
        "`{subject}` adds graph nodes on every iteration"),
    rule!("TK-10", "Graph-Constant Bottleneck", T, GraphManagement, Medium, true,
        ["T13"], [TS],
        "Large data is embedded into the graph as a constant.",
        "`tf.constant(<arg>)` where the argument is bound from a file-loading call or is a literal longer than the configured size threshold.",
        "`{subject}` embeds large data as a graph constant"),
    rule!("TK-11", "GPU Released Memory Failure", G, ResourceManagement, Medium, true,
        ["T14"], [TS],
        "A model is deleted or goes out of scope without an explicit session clear or garbage collection.",
        "`del <model>` or the end of a training function using a model, with neither `clear_session()` nor `gc.collect()` afterwards.",
        "`{subject}` is released without clear_session() or gc.collect()"),
    rule!("TK-12", "Shape Mismatch Leak", G, TrainingPipeline, Low, true,
        ["T15"], [TS],
        "Arithmetic between tensors of different rank triggers a large implicit broadcast.",
        "Binary arithmetic between two names whose literal-constructed shapes have different ranks, with no reshape on either.",
        "`{subject}` combines tensors of different rank without reshaping"),
    rule!("TK-13", "Improper Model Reuse", G, ResourceManagement, Medium, true,
        ["K02"], [KS],
        "Several models are rebuilt or recompiled in the same loop without clearing the session between them.",
        "Two or more distinct model variables (name contains generator, discriminator or model) rebuilt or recompiled inside the same loop without `clear_session`.",
        "models {subject} are rebuilt in one loop without clear_session()"),
    rule!("TK-14", "Minibatch Mismatch", G, TrainingPipeline, Low, false,
        ["K03"], [KS],
        "A very large literal batch size is passed to training or inference.",
        "`batch_size=<integer literal>` at or above the configured threshold on `fit`, `predict` or `evaluate`.",
        "batch size {subject} is at or above the configured threshold"),
    rule!("TK-15", "Library Path Mismatch", K, EnvironmentConfig, Low, true,
        ["K04"], [KS],
        "CUDA-related environment variables point at different CUDA versions.",
        "Two assignments into the process environment for CUDA-related keys whose values name different CUDA versions.",
        "environment paths reference different CUDA versions ({subject})"),
    rule!("TK-16", "Unnecessary Parallelism", TK, TrainingPipeline, High, true,
        ["K05"], [KS],
        "GridSearchCV is asked to use every core, spawning one model copy per worker.",
        "A `GridSearchCV(...)` call with `n_jobs=-1`.",
        "`{subject}` runs the grid search on every core"),
];
