"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
from typing import Callable, Optional


class Event(list):
    """
    Ordered list of handlers that are fired synchronously, in registration
    order. Used for user notifications as well as trainer and sweep hooks.
    """

    def __init__(self, name: Optional[str] = None) -> None:
        self._name = name
        super().__init__()

    def __call__(self, *args, **kwargs) -> None:
        for handler in list(self):
            handler(*args, **kwargs)

    def subscribe(self, handler: Callable) -> Callable:
        self.append(handler)
        return handler

    def __repr__(self):
        return f"Event {self._name} ({list.__repr__(self)})"
