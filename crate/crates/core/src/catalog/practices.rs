//! Remediation registry: 30 PyTorch, 15 TensorFlow and 5 Keras practices.

use super::BestPractice;

macro_rules! practice {
    ($id:literal, $name:literal, $summary:literal) => {
        BestPractice {
            id: $id,
            name: $name,
            summary: $summary,
        }
    };
}

pub static PRACTICES: &[BestPractice] = &[
    practice!("P01", "Context Manager Usage",
        "Run inference and evaluation inside `with torch.no_grad():` or `torch.inference_mode()` so autograd records no graph and keeps no activations. The context restores the previous mode on exit, even when an exception escapes."),
    practice!("P02", "Unregister Hooks and Avoid Self-References",
        "Keep the handle returned by `register_forward_hook` and friends and call `handle.remove()` once the hook has served its purpose. Avoid capturing the owning module inside the hook closure."),
    practice!("P03", "Optimize DataLoader Workers and Persistence for Efficiency",
        "Create the DataLoader once, outside any loop, and reuse it. Only enable `persistent_workers` together with a positive `num_workers`, and keep the worker count low when loading is cheap."),
    practice!("P04", "Proper Tensor Detachment",
        "Call `.detach()` (or `.item()` for scalars) before keeping a tensor such as a loss for logging or accumulation, and detach recurrent hidden state between batches, so the graph behind it can be freed."),
    practice!("P05", "Avoiding Zipping or Cycling the DataLoader",
        "Iterate a single DataLoader directly. When several sources are needed, combine them at the Dataset level instead of zipping loaders or cycling one of them."),
    practice!("P06", "Use In-Place Tensor Operations",
        "Do not grow a tensor by repeated `torch.cat`/`torch.stack` inside a loop. Collect the pieces in a list and concatenate once, or preallocate and fill with in-place operations such as `add_` or `copy_`."),
    practice!("P07", "Explicit GPU Memory Release",
        "After dropping references to large GPU objects, call `torch.cuda.empty_cache()` so cached blocks are handed back to the device pool."),
    practice!("P08", "Proper Memory Release (%xdel)",
        "In notebooks, release large tensors and models with `%xdel name` (or `del` plus `gc.collect()`) once they are no longer needed. The shell's output history otherwise keeps them reachable."),
    practice!("P09", "Store Intermediate Tensors Explicitly During Backward Pass",
        "In a custom autograd Function, hand tensors needed by backward to `ctx.save_for_backward()` instead of storing them on other `ctx` attributes or in module-level maps."),
    practice!("P10", "Remove Debug Artifacts",
        "Remove `torch.autograd.detect_anomaly` and `set_detect_anomaly(True)` from training code once debugging is done. Anomaly mode records extra state for every operation."),
    practice!("P11", "Dimension Squeezing",
        "Use `keepdim=False` on reductions whose reduced dimension is not needed afterwards, rather than keeping the dimension and squeezing it away later."),
    practice!("P12", "Breaking Reference Cycles",
        "Store back-references from buffers or child objects to their owner through `weakref.ref`, so the cycle does not keep both objects alive."),
    practice!("P13", "Static Methods to Avoid Object Accumulation",
        "Declare `forward` and `backward` of a `torch.autograd.Function` subclass as `@staticmethod`, call it through `Function.apply`, and save tensors through `ctx` rather than `self`."),
    practice!("P14", "Offload Non-Critical Operations to CPU",
        "Move large, non-critical matrix products to the CPU or compute them in chunks, transferring only the result back to the GPU, instead of accumulating products on the device inside a loop."),
    practice!("P15", "Use NumPy to Prevent Tensor Retention",
        "Convert tensors with `.detach().cpu().numpy()` before placing them in replay memories or other long-lived buffers."),
    practice!("P16", "Local Variable Usage",
        "Keep intermediate forward-pass tensors in local variables. Assign to `self` only for state registered with `register_buffer` or `register_parameter`."),
    practice!("P17", "Proper Tensor Management with ctx.save_for_backward()",
        "Save every tensor that backward reads with `ctx.save_for_backward()` in forward, and read it back from `ctx.saved_tensors`."),
    practice!("P18", "Manual Cache Release",
        "Bound or periodically clear hand-rolled tensor caches, and call `torch.cuda.empty_cache()` when a cache is dropped."),
    practice!("P19", "Batch Adjustment and Sequence Optimization",
        "Lower the batch size or sequence length when memory is tight. Mixed precision via `torch.autocast` and chunked processing reduce the footprint further."),
    practice!("P20", "Fine-Tune Gradients with torch.autograd.grad",
        "When gradients are needed several times, compute them for the exact inputs with `torch.autograd.grad` instead of calling `backward(retain_graph=True)` on every loop iteration."),
    practice!("P21", "Clear Graph and Backpropagate Immediately",
        "Reserve `retain_graph=True` for cases where a second backward pass really follows. Backpropagate right after computing each loss so the graph is released."),
    practice!("P22", "Avoid Nested grad() Calls",
        "For higher-order derivatives pass `create_graph=True` to the first `torch.autograd.grad` call rather than nesting grad calls over a graph that was not built for it."),
    practice!("P23", "Gradient Detachment for Running Stats",
        "Update running statistics of normalization layers from detached values or under `torch.no_grad()`, so each batch's graph is not chained into the buffers."),
    practice!("P24", "Disable Gradients During Inference",
        "Put the model in eval mode and run it under `torch.no_grad()`, or set `requires_grad = False` on its parameters, wherever no gradients are needed."),
    practice!("P25", "Proper Memory Release (del + empty_cache)",
        "Follow `del` of a large tensor or model with `torch.cuda.empty_cache()` (and `gc.collect()` when cycles exist) so the memory actually returns to the device."),
    practice!("P26", "Avoid Infinite Loops",
        "Use `itertools.cycle` only when endless iteration is intended, and give every data or training loop an explicit bound or exit condition."),
    practice!("P27", "Initialize Groups Outside the Loop and Reuse Them",
        "Create process groups with `torch.distributed.new_group` or `init_process_group` once, before the loop, and reuse them on every iteration."),
    practice!("P28", "Avoid Reinitializing Encoder and Decoder Inside Training Loop",
        "Construct encoders, decoders and other modules once before training starts and reuse them across iterations."),
    practice!("P29", "Clear Gradients at Training Loop Start",
        "Call `optimizer.zero_grad()` or `model.zero_grad()` at the start of every training iteration."),
    practice!("P30", "Subprocess-Based Isolation",
        "Run repeated `torch.jit.trace`/`torch.jit.script` work in a separate subprocess, or trace once outside the loop, so traced artifacts are released with the process."),
    practice!("T01", "Avoid Training Inside a Loop",
        "Avoid building and training models repeatedly inside a loop. When it cannot be avoided, clear the session and drop the previous model on every iteration."),
    practice!("T02", "Optimized TensorFlow Function Usage",
        "Wrap per-step computation in `tf.function` so it is traced once and reused instead of allocating new Python-side objects on every iteration."),
    practice!("T03", "Loop Exit Condition Enforcement",
        "Give every loop that allocates resources a reliable exit condition so those resources are released when it ends."),
    practice!("T04", "Resource Reuse and Memory Clearing",
        "Reuse tensors and models across iterations, call `tf.keras.backend.clear_session()` periodically, enable GPU memory growth, and stream data through generators instead of materializing it."),
    practice!("T05", "TensorFlow Operation Encapsulation",
        "Wrap raw TensorFlow operations used inside Keras models in a `tf.keras.layers.Layer` subclass."),
    practice!("T06", "Replace Lambda with Custom Layers",
        "Move complex or repeated operations out of `Lambda` layers into custom `Layer` subclasses. This also covers encapsulating custom operations in subclasses on the Keras side."),
    practice!("T07", "Avoid Model Recreation in Loops",
        "Build the model once and reuse it. If it must be rebuilt per iteration, call `clear_session()` before rebuilding."),
    practice!("T08", "Efficient Iterator Management",
        "Create one iterator up front, or call `predict` once over the whole dataset, instead of handing the `tf.data.Dataset` to `predict` on every loop iteration."),
    practice!("T09", "Manual Tensor Disposal",
        "Dispose of or delete the previous tensor before rebinding its variable to a newly produced tensor inside a loop."),
    practice!("T10", "Session and Resource Cleanup",
        "Close every `Session` and `InteractiveSession` with `.close()` when done with it, particularly in notebooks."),
    practice!("T11", "Context Manager Resource Control",
        "Scope sessions, files and similar resources in `with` blocks so they are released automatically, and clear the Keras session after each one."),
    practice!("T12", "Graph Isolation and Optimization",
        "Build the graph once outside the loop, or create a fresh `tf.Graph()` per iteration under `as_default()`. Finalizing the graph catches accidental additions."),
    practice!("T13", "Use Placeholders for Large Data",
        "Feed large arrays such as pretrained embeddings through placeholders, feed-initialized variables or `tf.data` rather than embedding them with `tf.constant`."),
    practice!("T14", "Explicit GPU Memory Cleanup",
        "After deleting a model, call `tf.keras.backend.clear_session()` and `gc.collect()` instead of relying on garbage collection alone."),
    practice!("T15", "Preemptive Tensor Reshaping",
        "Reshape operands to matching ranks explicitly before arithmetic so no large implicit broadcast is materialized."),
    practice!("K01", "Session Reset and Checkpointing",
        "Call `keras.backend.clear_session()` at the end of each training iteration and checkpoint weights to disk instead of holding several full models in memory."),
    practice!("K02", "Resource Reset and Cleanup",
        "Call `tf.keras.backend.clear_session()` between iterations that rebuild several models, such as a generator and a discriminator, and delete models that are no longer used."),
    practice!("K03", "Adjusting Batch Size",
        "Lower the batch size passed to `fit`, `predict` or `evaluate` until memory use is stable."),
    practice!("K04", "Consistent Environment Configuration",
        "Point `LD_LIBRARY_PATH`, `PATH` and `CUDA_HOME` at one CUDA installation, and isolate dependencies with virtualenv or Docker."),
    practice!("K05", "GridSearchCV Parallelism Control",
        "Avoid `n_jobs=-1` when grid-searching Keras estimators. Prefer setting n_jobs=1 for single-threaded execution, or parallelize training by other means."),
];
